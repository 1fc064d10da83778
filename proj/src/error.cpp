#include "sdlab/error.hpp"

namespace sdlab {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::BadBlock: return "BadBlock";
    case Errc::MultipleProgrammingForbidden: return "MultipleProgrammingForbidden";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::EmptyPattern: return "EmptyPattern";
    case Errc::PatternTooLong: return "PatternTooLong";
    case Errc::CorruptImage: return "CorruptImage";
    case Errc::InvalidGeometry: return "InvalidGeometry";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NoSuchFile: return "NoSuchFile";
    case Errc::FileExists: return "FileExists";
    case Errc::InvalidSize: return "InvalidSize";
    case Errc::FileSystemFull: return "FileSystemFull";
    case Errc::MediumForbidsReprogram: return "MediumForbidsReprogram";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownDistribution: return "UnknownDistribution";
    case Errc::NoRecords: return "NoRecords";
    case Errc::EmptyWindow: return "EmptyWindow";
    case Errc::ZeroRate: return "ZeroRate";
    case Errc::TooFewRuns: return "TooFewRuns";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace sdlab
