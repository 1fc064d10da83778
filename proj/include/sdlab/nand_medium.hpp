#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdlab/error.hpp"

namespace sdlab::nand {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;

// Physical block numbers are 1-based (1..block_count); chunk indices within a
// block are 0-based.
using BlockIndex = std::uint32_t;
using ChunkIndex = std::uint32_t;

inline constexpr std::size_t kSpareBytes = 16;
inline constexpr Byte kErased = 0xFF;

struct MediumGeometry {
  std::uint64_t chunk_size_bytes = 2048;
  std::uint64_t chunks_per_block = 64;
  std::uint64_t block_count = 1571;
  std::uint64_t erasure_limit = 10000;
  bool multiple_programming_allowed = true;

  void validate() const;
  std::uint64_t block_bytes() const { return chunks_per_block * chunk_size_bytes; }
  std::uint64_t total_chunks() const { return chunks_per_block * block_count; }

  friend bool operator==(const MediumGeometry&, const MediumGeometry&) = default;
};

struct ChunkView {
  std::span<const Byte> payload;
  std::span<const Byte> spare;
  std::uint32_t program_count = 0;
};

struct EraseBlockView {
  BlockIndex index = 0;
  std::uint64_t erase_count = 0;
  bool is_bad = false;
};

struct ScanHit {
  BlockIndex block = 0;
  ChunkIndex chunk = 0;
  std::uint32_t offset = 0;

  friend auto operator<=>(const ScanHit&, const ScanHit&) = default;
};

struct WearSummary {
  std::vector<std::uint64_t> erase_counts;  // index 0 is block 1
  std::uint64_t total_erasures = 0;
  std::uint64_t max_erase_count = 0;
  std::uint64_t bad_blocks = 0;
};

// A raw NAND array. Programming ANDs the written bits into the cell, erasing
// a block returns every bit of it to one.
class Medium {
 public:
  explicit Medium(MediumGeometry geometry);

  const MediumGeometry& geometry() const { return geometry_; }

  ChunkView program_chunk(BlockIndex block, ChunkIndex chunk, std::span<const Byte> payload,
                          std::span<const Byte> spare);
  EraseBlockView erase_block(BlockIndex block);
  ChunkView read_chunk(BlockIndex block, ChunkIndex chunk) const;
  EraseBlockView block_view(BlockIndex block) const;
  bool is_bad(BlockIndex block) const;

  // Matches never span chunk boundaries and only payload bytes are searched.
  std::vector<ScanHit> raw_scan(std::span<const Byte> pattern) const;
  std::vector<ScanHit> raw_scan(std::string_view pattern) const;

  WearSummary wear_summary() const;

  // Flat image: magic, five little-endian u64 geometry words, then every chunk
  // as payload followed by spare, blocks in index order.
  void save(std::ostream& out) const;
  static Medium load(std::istream& in);
  void save_file(const std::string& path) const;
  static Medium load_file(const std::string& path);

 private:
  std::size_t cell_offset(BlockIndex block, ChunkIndex chunk) const;
  std::size_t cell_index(BlockIndex block, ChunkIndex chunk) const;
  void check_index(BlockIndex block, ChunkIndex chunk) const;
  void check_block(BlockIndex block) const;

  MediumGeometry geometry_;
  std::size_t cell_bytes_;
  Bytes cells_;                               // payload+spare, contiguous
  std::vector<std::uint32_t> program_counts_;  // per chunk
  std::vector<std::uint64_t> erase_counts_;   // per block
  std::vector<bool> bad_;                      // per block
};

inline constexpr char kImageMagic[8] = {'S', 'D', 'L', 'N', 'A', 'N', 'D', '1'};

}  // namespace sdlab::nand
