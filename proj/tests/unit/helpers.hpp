#pragma once

#include <string>
#include <string_view>

#include <doctest.h>

#include "sdlab/error.hpp"
#include "sdlab/nand_medium.hpp"

#define CHECK_ERRC(expr, errc)                                  \
  do {                                                          \
    bool thrown_ = false;                                       \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const sdlab::Error& e_) {                          \
      thrown_ = true;                                           \
      CHECK_MESSAGE(e_.code() == (errc), std::string(e_.what()));          \
    }                                                           \
    CHECK_MESSAGE(thrown_, "expected " #errc " from " #expr);   \
  } while (0)

namespace testutil {

inline sdlab::nand::Bytes bytes(std::string_view s) { return {s.begin(), s.end()}; }

inline sdlab::nand::MediumGeometry small_geometry(std::uint64_t blocks = 8, std::uint64_t cpb = 8,
                                                  std::uint64_t chunk = 64, bool multi = true) {
  return {chunk, cpb, blocks, 10000, multi};
}

}  // namespace testutil
