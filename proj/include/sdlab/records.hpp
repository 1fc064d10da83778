#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "sdlab/nand_medium.hpp"

namespace sdlab {

// One simulated second.
using Ticks = std::uint64_t;
using ObjectId = std::uint32_t;
using WriterId = std::uint8_t;

inline constexpr double kTicksPerHour = 3600.0;

enum class ChunkKind : std::uint8_t { Header = 0, Data = 1, Junk = 2 };

std::string_view chunk_kind_name(ChunkKind kind) noexcept;

namespace metrics {

struct AllocationRecord {
  Ticks time_ticks = 0;
  nand::BlockIndex physical_block = 0;
  std::uint64_t sequence_number = 0;
  std::uint64_t free_chunks = 0;
  std::uint64_t erased_blocks = 0;
  std::string partition_label = "data";

  friend bool operator==(const AllocationRecord&, const AllocationRecord&) = default;
};

struct ChunkWriteRecord {
  Ticks time_ticks = 0;
  nand::BlockIndex block = 0;
  nand::ChunkIndex chunk = 0;
  WriterId writer_id = 0;
  ChunkKind kind = ChunkKind::Data;
  ObjectId object_id = 0;
  std::uint32_t chunk_offset = 0;
};

// Lifecycle of one probe secret: written at t0, deleted at t1, physically
// gone from the medium at t2.
struct SecretRecord {
  std::uint32_t secret_id = 0;
  nand::Bytes pattern;
  Ticks t_written = 0;
  std::optional<Ticks> t_deleted;
  std::optional<Ticks> t_erased;
  bool censored = false;  // still on the medium when the run ended
  std::set<nand::BlockIndex> blocks_touched;
};

}  // namespace metrics
}  // namespace sdlab
