#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdlab {

enum class Errc {
  IndexOutOfRange,
  BadBlock,
  MultipleProgrammingForbidden,
  SizeMismatch,
  EmptyPattern,
  PatternTooLong,
  CorruptImage,
  InvalidGeometry,
  InvalidConfig,
  NoSuchFile,
  FileExists,
  InvalidSize,
  FileSystemFull,
  MediumForbidsReprogram,
  ParseError,
  UnknownDistribution,
  NoRecords,
  EmptyWindow,
  ZeroRate,
  TooFewRuns,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and the Python layer) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sdlab
