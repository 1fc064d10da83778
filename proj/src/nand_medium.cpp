#include "sdlab/nand_medium.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <istream>
#include <limits>
#include <ostream>

namespace sdlab::nand {

namespace {

constexpr std::uint64_t kFlagMultipleProgramming = 1;
constexpr std::size_t kHeaderBytes = sizeof(kImageMagic) + 5 * 8;
// Refuse to materialise images larger than this from an untrusted header.
constexpr std::uint64_t kMaxImageBytes = std::uint64_t{1} << 34;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf{};
  for (std::size_t i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(p[i])} << (8 * i);
  return v;
}

}  // namespace

void MediumGeometry::validate() const {
  if (chunk_size_bytes < 1 || chunks_per_block < 1 || block_count < 1)
    throw Error(Errc::InvalidGeometry, "chunk size, chunks per block and block count must be >= 1");
  if (erasure_limit < 1) throw Error(Errc::InvalidGeometry, "erasure limit must be >= 1");
  if (block_count > std::numeric_limits<BlockIndex>::max() ||
      chunks_per_block > std::numeric_limits<ChunkIndex>::max() ||
      chunk_size_bytes > std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::InvalidGeometry, "geometry exceeds index range");
  if (total_chunks() * (chunk_size_bytes + kSpareBytes) > kMaxImageBytes)
    throw Error(Errc::InvalidGeometry, "medium too large");
}

Medium::Medium(MediumGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  cell_bytes_ = geometry_.chunk_size_bytes + kSpareBytes;
  cells_.assign(geometry_.total_chunks() * cell_bytes_, kErased);
  program_counts_.assign(geometry_.total_chunks(), 0);
  erase_counts_.assign(geometry_.block_count, 0);
  bad_.assign(geometry_.block_count, false);
}

void Medium::check_block(BlockIndex block) const {
  if (block < 1 || block > geometry_.block_count)
    throw Error(Errc::IndexOutOfRange, "block " + std::to_string(block));
}

void Medium::check_index(BlockIndex block, ChunkIndex chunk) const {
  check_block(block);
  if (chunk >= geometry_.chunks_per_block)
    throw Error(Errc::IndexOutOfRange, "chunk " + std::to_string(chunk));
}

std::size_t Medium::cell_index(BlockIndex block, ChunkIndex chunk) const {
  return static_cast<std::size_t>(block - 1) * geometry_.chunks_per_block + chunk;
}

std::size_t Medium::cell_offset(BlockIndex block, ChunkIndex chunk) const {
  return cell_index(block, chunk) * cell_bytes_;
}

ChunkView Medium::program_chunk(BlockIndex block, ChunkIndex chunk, std::span<const Byte> payload,
                                std::span<const Byte> spare) {
  check_index(block, chunk);
  if (bad_[block - 1]) throw Error(Errc::BadBlock, "block " + std::to_string(block));
  if (payload.size() != geometry_.chunk_size_bytes || spare.size() != kSpareBytes)
    throw Error(Errc::SizeMismatch, "payload/spare size does not match geometry");
  const std::size_t idx = cell_index(block, chunk);
  if (program_counts_[idx] >= 1 && !geometry_.multiple_programming_allowed)
    throw Error(Errc::MultipleProgrammingForbidden,
                "block " + std::to_string(block) + " chunk " + std::to_string(chunk));

  Byte* cell = cells_.data() + idx * cell_bytes_;
  std::transform(payload.begin(), payload.end(), cell, cell, std::bit_and<>{});
  Byte* oob = cell + geometry_.chunk_size_bytes;
  std::transform(spare.begin(), spare.end(), oob, oob, std::bit_and<>{});
  ++program_counts_[idx];
  return read_chunk(block, chunk);
}

EraseBlockView Medium::erase_block(BlockIndex block) {
  check_block(block);
  if (bad_[block - 1]) throw Error(Errc::BadBlock, "block " + std::to_string(block));
  const std::size_t first = cell_offset(block, 0);
  std::fill_n(cells_.begin() + static_cast<std::ptrdiff_t>(first),
              geometry_.chunks_per_block * cell_bytes_, kErased);
  std::fill_n(program_counts_.begin() + static_cast<std::ptrdiff_t>(cell_index(block, 0)),
              geometry_.chunks_per_block, 0u);
  auto& count = erase_counts_[block - 1];
  ++count;
  if (count > geometry_.erasure_limit) bad_[block - 1] = true;
  return block_view(block);
}

ChunkView Medium::read_chunk(BlockIndex block, ChunkIndex chunk) const {
  check_index(block, chunk);
  const Byte* cell = cells_.data() + cell_offset(block, chunk);
  return ChunkView{{cell, geometry_.chunk_size_bytes},
                   {cell + geometry_.chunk_size_bytes, kSpareBytes},
                   program_counts_[cell_index(block, chunk)]};
}

EraseBlockView Medium::block_view(BlockIndex block) const {
  check_block(block);
  return {block, erase_counts_[block - 1], bad_[block - 1]};
}

bool Medium::is_bad(BlockIndex block) const {
  check_block(block);
  return bad_[block - 1];
}

std::vector<ScanHit> Medium::raw_scan(std::span<const Byte> pattern) const {
  if (pattern.empty()) throw Error(Errc::EmptyPattern, "scan pattern is empty");
  if (pattern.size() > geometry_.chunk_size_bytes)
    throw Error(Errc::PatternTooLong, "pattern longer than one chunk");

  std::vector<ScanHit> hits;
  const std::boyer_moore_horspool_searcher searcher(pattern.begin(), pattern.end());
  for (BlockIndex b = 1; b <= geometry_.block_count; ++b) {
    for (ChunkIndex c = 0; c < geometry_.chunks_per_block; ++c) {
      const Byte* begin = cells_.data() + cell_offset(b, c);
      const Byte* end = begin + geometry_.chunk_size_bytes;
      for (const Byte* it = std::search(begin, end, searcher); it != end;
           it = std::search(it + 1, end, searcher)) {
        hits.push_back({b, c, static_cast<std::uint32_t>(it - begin)});
      }
    }
  }
  return hits;
}

std::vector<ScanHit> Medium::raw_scan(std::string_view pattern) const {
  const auto* p = reinterpret_cast<const Byte*>(pattern.data());
  return raw_scan(std::span<const Byte>(p, pattern.size()));
}

WearSummary Medium::wear_summary() const {
  WearSummary w;
  w.erase_counts = erase_counts_;
  for (std::size_t i = 0; i < erase_counts_.size(); ++i) {
    w.total_erasures += erase_counts_[i];
    w.max_erase_count = std::max(w.max_erase_count, erase_counts_[i]);
    if (bad_[i]) ++w.bad_blocks;
  }
  return w;
}

void Medium::save(std::ostream& out) const {
  out.write(kImageMagic, sizeof(kImageMagic));
  put_u64(out, geometry_.chunk_size_bytes);
  put_u64(out, geometry_.chunks_per_block);
  put_u64(out, geometry_.block_count);
  put_u64(out, geometry_.erasure_limit);
  put_u64(out, geometry_.multiple_programming_allowed ? kFlagMultipleProgramming : 0);
  out.write(reinterpret_cast<const char*>(cells_.data()), static_cast<std::streamsize>(cells_.size()));
  if (!out) throw Error(Errc::Io, "failed writing medium image");
}

Medium Medium::load(std::istream& in) {
  std::array<char, kHeaderBytes> header{};
  if (!in.read(header.data(), header.size()))
    throw Error(Errc::CorruptImage, "truncated header");
  if (std::memcmp(header.data(), kImageMagic, sizeof(kImageMagic)) != 0)
    throw Error(Errc::CorruptImage, "bad magic");
  const char* words = header.data() + sizeof(kImageMagic);
  MediumGeometry g;
  g.chunk_size_bytes = get_u64(words);
  g.chunks_per_block = get_u64(words + 8);
  g.block_count = get_u64(words + 16);
  g.erasure_limit = get_u64(words + 24);
  const std::uint64_t flags = get_u64(words + 32);
  if ((flags & ~kFlagMultipleProgramming) != 0) throw Error(Errc::CorruptImage, "unknown flags");
  g.multiple_programming_allowed = (flags & kFlagMultipleProgramming) != 0;
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(Errc::CorruptImage, e.what());
  }

  Medium m(g);
  if (!in.read(reinterpret_cast<char*>(m.cells_.data()), static_cast<std::streamsize>(m.cells_.size())))
    throw Error(Errc::CorruptImage, "truncated body");
  if (in.peek() != std::char_traits<char>::eof()) throw Error(Errc::CorruptImage, "trailing bytes");

  // Program counts are not part of the image; any cell with a zero bit has
  // been programmed at least once.
  for (std::size_t i = 0; i < m.program_counts_.size(); ++i) {
    const Byte* cell = m.cells_.data() + i * m.cell_bytes_;
    const bool erased = std::all_of(cell, cell + m.cell_bytes_, [](Byte b) { return b == kErased; });
    m.program_counts_[i] = erased ? 0 : 1;
  }
  return m;
}

void Medium::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open " + path + " for writing");
  save(out);
}

Medium Medium::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return load(in);
}

}  // namespace sdlab::nand
