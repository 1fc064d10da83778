#include "sdlab/lsfs.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

namespace sdlab {

std::string_view chunk_kind_name(ChunkKind kind) noexcept {
  switch (kind) {
    case ChunkKind::Header: return "header";
    case ChunkKind::Data: return "data";
    case ChunkKind::Junk: return "junk";
  }
  return "unknown";
}

}  // namespace sdlab

namespace sdlab::fs {

namespace {

constexpr std::size_t kHeaderFixedBytes = 16;
constexpr Byte kHeaderUnlinked = 0x01;
constexpr Byte kHeaderJunk = 0x02;

template <typename T>
void put_le(Byte* out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<Byte>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
}

template <typename T>
T get_le(const Byte* in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{in[i]} << (8 * i);
  return static_cast<T>(v);
}

// RAII flag so that nested allocation never re-enters the collector.
class GcScope {
 public:
  explicit GcScope(bool& flag) : flag_(flag) { flag_ = true; }
  ~GcScope() { flag_ = false; }
  GcScope(const GcScope&) = delete;
  GcScope& operator=(const GcScope&) = delete;

 private:
  bool& flag_;
};

}  // namespace

std::array<Byte, nand::kSpareBytes> ChunkTag::encode() const {
  std::array<Byte, nand::kSpareBytes> out{};
  put_le<std::uint32_t>(out.data(), object_id);
  put_le<std::uint32_t>(out.data() + 4, chunk_offset);
  put_le<std::uint32_t>(out.data() + 8, static_cast<std::uint32_t>(sequence_number));
  put_le<std::uint16_t>(out.data() + 12, byte_count);
  out[14] = static_cast<Byte>(kind);
  out[15] = writer_id;
  return out;
}

ChunkTag ChunkTag::decode(std::span<const Byte> spare) {
  if (spare.size() < nand::kSpareBytes) throw Error(Errc::SizeMismatch, "spare area too small");
  ChunkTag t;
  t.object_id = get_le<std::uint32_t>(spare.data());
  t.chunk_offset = get_le<std::uint32_t>(spare.data() + 4);
  t.sequence_number = get_le<std::uint32_t>(spare.data() + 8);
  t.byte_count = get_le<std::uint16_t>(spare.data() + 12);
  t.kind = static_cast<ChunkKind>(spare[14]);
  t.writer_id = spare[15];
  return t;
}

std::string_view block_state_name(BlockState s) noexcept {
  switch (s) {
    case BlockState::Empty: return "empty";
    case BlockState::Allocating: return "allocating";
    case BlockState::Full: return "full";
    case BlockState::Dirty: return "dirty";
    case BlockState::Bad: return "bad";
  }
  return "unknown";
}

void FsConfig::validate(const nand::MediumGeometry& g) const {
  if (reserve_blocks < 1) throw Error(Errc::InvalidConfig, "reserve_blocks must be >= 1");
  if (std::uint64_t{reserve_blocks} + 2 > g.block_count)
    throw Error(Errc::InvalidConfig, "reserve_blocks leaves fewer than two usable blocks");
  if (!(passive_gc_dirtiness_threshold > 0.0 && passive_gc_dirtiness_threshold <= 1.0))
    throw Error(Errc::InvalidConfig, "passive_gc_dirtiness_threshold must be in (0, 1]");
  if (g.chunk_size_bytes < 32 || g.chunk_size_bytes > 0xFFFF)
    throw Error(Errc::InvalidConfig, "file system needs 32..65535 byte chunks");
  if (g.chunks_per_block < 2) throw Error(Errc::InvalidConfig, "file system needs >= 2 chunks per block");
  if (zero_overwrite_enabled && !g.multiple_programming_allowed)
    throw Error(Errc::MediumForbidsReprogram, "zero overwriting needs multiple programming");
}

std::optional<BlockIndex> find_next_empty(std::span<const std::uint8_t> empty, BlockIndex last) {
  const std::size_t n = empty.size();
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t b = ((last + i - 1) % n) + 1;
    if (empty[b - 1]) return static_cast<BlockIndex>(b);
  }
  return std::nullopt;
}

FileSystem::FileSystem(nand::MediumGeometry geometry, FsConfig config)
    : medium_(geometry), config_(config) {
  config_.validate(medium_.geometry());
  const auto& g = medium_.geometry();
  blocks_.assign(g.block_count, BlockMeta{});
  chunk_states_.assign(g.total_chunks(), ChunkState::Free);
  chunk_tags_.assign(g.total_chunks(), ChunkTag{});
  free_chunks_ = g.total_chunks();
  empty_blocks_ = g.block_count;
}

std::size_t FileSystem::slot(ChunkAddr a) const {
  return static_cast<std::size_t>(a.block - 1) * chunks_per_block() + a.chunk;
}

std::uint32_t FileSystem::chunks_per_block() const {
  return static_cast<std::uint32_t>(medium_.geometry().chunks_per_block);
}

std::uint64_t FileSystem::reserve_chunks() const {
  return std::uint64_t{config_.reserve_blocks} * chunks_per_block();
}

std::uint64_t FileSystem::allocatable_free() const {
  const std::uint64_t remainder = current_ ? chunks_per_block() - meta(*current_).next_free : 0;
  return remainder + empty_blocks_ * chunks_per_block();
}

FileObject& FileSystem::file_mut(ObjectId id) {
  auto it = files_.find(id);
  if (it == files_.end()) throw Error(Errc::NoSuchFile, "object " + std::to_string(id));
  return it->second;
}

const FileObject& FileSystem::file(ObjectId id) const {
  auto it = files_.find(id);
  if (it == files_.end()) throw Error(Errc::NoSuchFile, "object " + std::to_string(id));
  return it->second;
}

std::optional<ObjectId> FileSystem::find(const std::string& name) const {
  for (const auto& [id, f] : files_)
    if (f.name == name) return id;
  return std::nullopt;
}

std::vector<ObjectId> FileSystem::file_ids() const {
  std::vector<ObjectId> ids;
  ids.reserve(files_.size());
  for (const auto& [id, f] : files_) ids.push_back(id);
  return ids;
}

std::optional<ChunkTag> FileSystem::tag_at(ChunkAddr addr) const {
  medium_.read_chunk(addr.block, addr.chunk);  // range check
  const std::size_t s = slot(addr);
  if (chunk_states_[s] == ChunkState::Free || chunk_tags_[s].object_id == 0) return std::nullopt;
  return chunk_tags_[s];
}

void FileSystem::set_zero_overwrite(bool enabled) {
  if (enabled && !medium_.geometry().multiple_programming_allowed)
    throw Error(Errc::MediumForbidsReprogram, "medium allows a single program per erase");
  config_.zero_overwrite_enabled = enabled;
}

FreeSpace FileSystem::free_space() const {
  return FreeSpace{free_chunks_ + deleted_chunks_, empty_blocks_, deleted_chunks_, free_chunks_};
}

std::uint64_t FileSystem::user_free_chunks() const {
  const std::uint64_t reclaimable = free_chunks_ + deleted_chunks_;
  return reclaimable > reserve_chunks() ? reclaimable - reserve_chunks() : 0;
}

BlockInfo FileSystem::block_info(BlockIndex block) const {
  medium_.block_view(block);  // range check
  const BlockMeta& m = meta(block);
  BlockInfo info;
  info.live_chunks = m.live;
  info.deleted_chunks = m.deleted;
  info.next_free_chunk = m.next_free;
  info.sequence_number_at_alloc = m.seq_at_alloc;
  if (m.bad)
    info.state = BlockState::Bad;
  else if (!m.in_use)
    info.state = BlockState::Empty;
  else if (is_current(block))
    info.state = BlockState::Allocating;
  else if (m.deleted > 0)
    info.state = BlockState::Dirty;
  else
    info.state = BlockState::Full;
  return info;
}

// ---------------------------------------------------------------- allocation

BlockIndex FileSystem::allocate_block() { return allocate_block_impl(true); }

BlockIndex FileSystem::allocate_block_impl(bool allow_gc) {
  // A current block that never received a chunk goes straight back to the pool.
  if (current_ && meta(*current_).next_free == 0) {
    meta(*current_) = BlockMeta{};
    ++empty_blocks_;
    current_.reset();
  }

  auto scan = [this] {
    std::vector<std::uint8_t> empty(blocks_.size());
    for (std::size_t i = 0; i < blocks_.size(); ++i) empty[i] = !blocks_[i].bad && !blocks_[i].in_use;
    return find_next_empty(empty, last_allocated_);
  };

  auto found = scan();
  if (!found && allow_gc && !gc_active_) {
    collect_until([this] { return empty_blocks_ >= 1; });
    found = scan();
  }
  if (!found) throw Error(Errc::FileSystemFull, "no empty erase block available");

  const BlockIndex b = *found;
  const std::optional<BlockIndex> previous = current_;
  BlockMeta& m = meta(b);
  m = BlockMeta{};
  m.in_use = true;
  m.seq_at_alloc = ++block_sequence_;
  --empty_blocks_;
  current_ = b;
  last_allocated_ = b;
  if (previous) erase_if_dead(*previous);

  if (observer_) {
    metrics::AllocationRecord rec;
    rec.time_ticks = now_;
    rec.physical_block = b;
    rec.sequence_number = m.seq_at_alloc;
    rec.free_chunks = free_chunks_ + deleted_chunks_;
    rec.erased_blocks = empty_blocks_;
    observer_->on_block_allocated(rec);
  }

  if (allow_gc && !gc_active_ && empty_blocks_ < config_.reserve_blocks)
    collect_until([this] { return empty_blocks_ >= config_.reserve_blocks; });
  return b;
}

void FileSystem::ensure_user_space() {
  auto admitted = [this] { return allocatable_free() > reserve_chunks(); };
  if (admitted()) return;
  collect_until(admitted);
  // Last resort: retire the partially written current block so that deleted
  // chunks inside it become collectable too.
  if (!admitted() && current_) {
    const BlockMeta& m = meta(*current_);
    if (m.deleted > 0 && m.live <= empty_blocks_ * chunks_per_block()) {
      current_.reset();
      collect_until(admitted);
    }
  }
  if (!admitted()) throw Error(Errc::FileSystemFull, "no reclaimable chunk left on the medium");
}

ChunkAddr FileSystem::next_chunk(Admission admission) {
  if (admission == Admission::User) ensure_user_space();
  if (!current_ || meta(*current_).next_free >= chunks_per_block())
    allocate_block_impl(admission != Admission::Collector);
  return ChunkAddr{*current_, meta(*current_).next_free};
}

ChunkAddr FileSystem::program(ChunkTag tag, std::span<const Byte> payload, Admission admission) {
  const ChunkAddr addr = next_chunk(admission);
  tag.sequence_number = ++write_sequence_;
  const auto spare = tag.encode();
  medium_.program_chunk(addr.block, addr.chunk, payload, spare);

  BlockMeta& m = meta(addr.block);
  ++m.next_free;
  ++m.live;
  --free_chunks_;
  const std::size_t s = slot(addr);
  chunk_states_[s] = ChunkState::Live;
  chunk_tags_[s] = tag;
  ++residue_[tag.object_id];

  if (observer_) {
    observer_->on_chunk_written(metrics::ChunkWriteRecord{now_, addr.block, addr.chunk, tag.writer_id,
                                                          tag.kind, tag.object_id, tag.chunk_offset});
  }
  return addr;
}

// Single route for retiring a chunk version: deletion, truncation, overwrite
// and collector copies all land here.
void FileSystem::delete_chunk(ChunkAddr addr, bool allow_zero) {
  const std::size_t s = slot(addr);
  if (chunk_states_[s] != ChunkState::Live) return;
  chunk_states_[s] = ChunkState::Deleted;
  BlockMeta& m = meta(addr.block);
  --m.live;
  ++m.deleted;
  ++deleted_chunks_;

  if (allow_zero && config_.zero_overwrite_enabled) {
    const Bytes zeros(medium_.geometry().chunk_size_bytes, 0x00);
    const std::array<Byte, nand::kSpareBytes> zero_spare{};
    medium_.program_chunk(addr.block, addr.chunk, zeros, zero_spare);
    ChunkTag& tag = chunk_tags_[s];
    const ObjectId owner = tag.object_id;
    tag = ChunkTag{};
    if (auto it = residue_.find(owner); it != residue_.end() && --it->second == 0) residue_.erase(it);
    if (observer_) observer_->on_chunk_zeroed(addr, now_);
    settle_unlinked(owner);
  }
  erase_if_dead(addr.block);
}

// A block whose last live chunk is gone is erased on the spot, as YAFFS does
// with fully dirty blocks. The collector handles its own victims.
void FileSystem::erase_if_dead(BlockIndex b) {
  const BlockMeta& m = meta(b);
  if (gc_active_ || m.bad || !m.in_use || m.live > 0 || m.next_free == 0 || is_current(b)) return;
  GcScope scope(gc_active_);
  erase_collected(b);
}

// An unlinked object's deletion header stays live until it is the last trace
// of the object on the medium.
void FileSystem::settle_unlinked(ObjectId id) {
  auto it = unlinked_.find(id);
  if (it == unlinked_.end()) return;
  auto r = residue_.find(id);
  const std::uint64_t remaining = r == residue_.end() ? 0 : r->second;
  if (remaining > 1) return;
  const ChunkAddr header = it->second;
  unlinked_.erase(it);
  delete_chunk(header);
}

void FileSystem::relocate(const ChunkTag& tag, ChunkAddr to) {
  if (auto f = files_.find(tag.object_id); f != files_.end()) {
    if (tag.chunk_offset == 0)
      f->second.header = to;
    else
      f->second.chunk_map[tag.chunk_offset] = to;
    return;
  }
  if (auto u = unlinked_.find(tag.object_id); u != unlinked_.end()) u->second = to;
}

// ---------------------------------------------------------------- file ops

void FileSystem::write_header(FileObject& f, bool unlinked, Admission admission) {
  Bytes payload(medium_.geometry().chunk_size_bytes, nand::kErased);
  put_le<std::uint32_t>(payload.data(), f.object_id);
  put_le<std::uint64_t>(payload.data() + 4, f.size_bytes);
  payload[12] = static_cast<Byte>((unlinked ? kHeaderUnlinked : 0) | (f.junk ? kHeaderJunk : 0));
  payload[13] = f.owner;
  put_le<std::uint16_t>(payload.data() + 14, static_cast<std::uint16_t>(f.name.size()));
  std::memcpy(payload.data() + kHeaderFixedBytes, f.name.data(), f.name.size());

  ChunkTag tag;
  tag.object_id = f.object_id;
  tag.chunk_offset = 0;
  tag.byte_count = static_cast<std::uint16_t>(kHeaderFixedBytes + f.name.size());
  tag.kind = ChunkKind::Header;
  tag.writer_id = f.owner;
  const ChunkAddr fresh = program(tag, payload, admission);
  // Read the old location only now: collection inside program() may have moved it.
  const ChunkAddr old = f.header;
  f.header = fresh;
  if (old.block != 0) delete_chunk(old);
}

ObjectId FileSystem::create_file(const std::string& name, WriterId owner, bool junk) {
  if (name.empty() || name.size() > medium_.geometry().chunk_size_bytes - kHeaderFixedBytes)
    throw Error(Errc::InvalidSize, "file name length");
  if (find(name)) throw Error(Errc::FileExists, name);

  FileObject f;
  f.object_id = next_object_id_;
  f.name = name;
  f.owner = owner;
  f.junk = junk;
  write_header(f, false, Admission::User);
  ++next_object_id_;
  const ObjectId id = f.object_id;
  files_.emplace(id, std::move(f));
  return id;
}

Bytes FileSystem::chunk_payload(ChunkAddr addr) const {
  const auto view = medium_.read_chunk(addr.block, addr.chunk);
  return Bytes(view.payload.begin(), view.payload.end());
}

std::uint64_t FileSystem::write_file(ObjectId id, std::uint64_t offset_bytes, std::span<const Byte> data) {
  FileObject& f = file_mut(id);
  if (data.empty()) return f.size_bytes;

  const std::uint64_t cs = medium_.geometry().chunk_size_bytes;
  const std::uint64_t end = offset_bytes + data.size();
  const std::uint64_t first = offset_bytes / cs;
  const std::uint64_t last = (end - 1) / cs;
  if (last + 1 > std::numeric_limits<std::uint32_t>::max()) throw Error(Errc::InvalidSize, "file too large");

  for (std::uint64_t idx = first; idx <= last; ++idx) {
    const std::uint64_t chunk_start = idx * cs;
    const std::uint64_t new_size = std::max(f.size_bytes, std::min(end, chunk_start + cs));
    const auto byte_count = static_cast<std::uint16_t>(std::min(cs, new_size - chunk_start));
    const auto offset = static_cast<std::uint32_t>(idx + 1);

    Bytes buf(cs, nand::kErased);
    std::fill_n(buf.begin(), byte_count, Byte{0});
    auto old = f.chunk_map.find(offset);
    if (old != f.chunk_map.end()) {
      const auto valid = chunk_tags_[slot(old->second)].byte_count;
      const auto view = medium_.read_chunk(old->second.block, old->second.chunk);
      std::copy_n(view.payload.begin(), valid, buf.begin());
    }
    const std::uint64_t from = std::max(offset_bytes, chunk_start);
    const std::uint64_t to = std::min(end, chunk_start + cs);
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(from - offset_bytes),
              data.begin() + static_cast<std::ptrdiff_t>(to - offset_bytes),
              buf.begin() + static_cast<std::ptrdiff_t>(from - chunk_start));

    ChunkTag tag;
    tag.object_id = id;
    tag.chunk_offset = offset;
    tag.byte_count = byte_count;
    tag.kind = f.junk ? ChunkKind::Junk : ChunkKind::Data;
    tag.writer_id = f.owner;
    const ChunkAddr fresh = program(tag, buf, Admission::User);
    // `old` may have been invalidated by collection inside program().
    auto prev = f.chunk_map.find(offset);
    std::optional<ChunkAddr> superseded;
    if (prev != f.chunk_map.end()) superseded = prev->second;
    f.chunk_map[offset] = fresh;
    f.size_bytes = new_size;
    if (superseded) delete_chunk(*superseded);
  }

  write_header(f, false, Admission::User);
  passive_step();
  return f.size_bytes;
}

Bytes FileSystem::read_file(ObjectId id, std::uint64_t offset_bytes, std::uint64_t length) const {
  const FileObject& f = file(id);
  if (offset_bytes >= f.size_bytes) return {};
  const std::uint64_t end = std::min(f.size_bytes, offset_bytes + length);
  const std::uint64_t cs = medium_.geometry().chunk_size_bytes;
  Bytes out(end - offset_bytes, 0);
  for (std::uint64_t idx = offset_bytes / cs; idx * cs < end; ++idx) {
    auto it = f.chunk_map.find(static_cast<std::uint32_t>(idx + 1));
    if (it == f.chunk_map.end()) continue;  // hole
    const std::uint64_t chunk_start = idx * cs;
    const std::uint64_t valid_end = chunk_start + chunk_tags_[slot(it->second)].byte_count;
    const std::uint64_t from = std::max(offset_bytes, chunk_start);
    const std::uint64_t to = std::min(end, valid_end);
    if (from >= to) continue;
    const auto view = medium_.read_chunk(it->second.block, it->second.chunk);
    std::copy(view.payload.begin() + static_cast<std::ptrdiff_t>(from - chunk_start),
              view.payload.begin() + static_cast<std::ptrdiff_t>(to - chunk_start),
              out.begin() + static_cast<std::ptrdiff_t>(from - offset_bytes));
  }
  return out;
}

Bytes FileSystem::read_file(ObjectId id) const { return read_file(id, 0, file(id).size_bytes); }

void FileSystem::delete_file(ObjectId id) {
  FileObject& f = file_mut(id);
  for (const auto& [offset, addr] : f.chunk_map) delete_chunk(addr);
  f.chunk_map.clear();

  write_header(f, true, Admission::Privileged);
  const ChunkAddr deletion_header = f.header;
  files_.erase(id);
  unlinked_.emplace(id, deletion_header);
  settle_unlinked(id);
}

void FileSystem::truncate_file(ObjectId id, std::uint64_t new_size_bytes) {
  FileObject& f = file_mut(id);
  if (new_size_bytes > f.size_bytes) throw Error(Errc::InvalidSize, "truncate cannot grow a file");
  if (new_size_bytes == f.size_bytes) return;

  const std::uint64_t cs = medium_.geometry().chunk_size_bytes;
  const std::uint64_t keep = (new_size_bytes + cs - 1) / cs;
  for (auto it = f.chunk_map.upper_bound(static_cast<std::uint32_t>(keep)); it != f.chunk_map.end();) {
    delete_chunk(it->second);
    it = f.chunk_map.erase(it);
  }

  const std::uint64_t partial = new_size_bytes % cs;
  if (partial != 0) {
    const auto offset = static_cast<std::uint32_t>(keep);
    if (auto it = f.chunk_map.find(offset); it != f.chunk_map.end()) {
      const ChunkTag old_tag = chunk_tags_[slot(it->second)];
      if (old_tag.byte_count > partial) {
        Bytes buf = chunk_payload(it->second);
        std::fill(buf.begin() + static_cast<std::ptrdiff_t>(partial), buf.end(), nand::kErased);
        ChunkTag tag = old_tag;
        tag.byte_count = static_cast<std::uint16_t>(partial);
        const ChunkAddr fresh = program(tag, buf, Admission::Privileged);
        const ChunkAddr superseded = f.chunk_map[offset];
        f.chunk_map[offset] = fresh;
        delete_chunk(superseded);
      }
    }
  }

  f.size_bytes = new_size_bytes;
  write_header(f, false, Admission::Privileged);
  passive_step();
}

// ---------------------------------------------------------------- collection

std::optional<BlockIndex> FileSystem::aggressive_victim() const {
  std::optional<BlockIndex> best;
  std::uint32_t best_live = 0;
  const std::uint64_t room = allocatable_free();
  for (BlockIndex b = 1; b <= blocks_.size(); ++b) {
    const BlockMeta& m = meta(b);
    if (m.bad || !m.in_use || is_current(b) || m.deleted == 0) continue;
    if (m.live > room) continue;
    if (!best || m.live < best_live) {
      best = b;
      best_live = m.live;
    }
  }
  return best;
}

std::optional<BlockIndex> FileSystem::passive_victim() const {
  std::optional<BlockIndex> best;
  std::uint32_t best_deleted = 0;
  const double cpb = chunks_per_block();
  for (BlockIndex b = 1; b <= blocks_.size(); ++b) {
    const BlockMeta& m = meta(b);
    if (m.bad || !m.in_use || is_current(b) || m.deleted == 0) continue;
    if (m.deleted / cpb < config_.passive_gc_dirtiness_threshold) continue;
    if (!best || m.deleted > best_deleted) {
      best = b;
      best_deleted = m.deleted;
    }
  }
  return best;
}

void FileSystem::copy_live_chunk(ChunkAddr from, bool allow_zero) {
  const ChunkTag tag = chunk_tags_[slot(from)];
  const Bytes payload = chunk_payload(from);
  const ChunkAddr to = program(tag, payload, Admission::Collector);
  relocate(tag, to);
  delete_chunk(from, allow_zero);
}

void FileSystem::erase_collected(BlockIndex b) {
  BlockMeta& m = meta(b);
  std::vector<ObjectId> touched;
  for (ChunkIndex c = 0; c < chunks_per_block(); ++c) {
    const std::size_t s = slot({b, c});
    if (chunk_states_[s] != ChunkState::Free && chunk_tags_[s].object_id != 0) {
      const ObjectId owner = chunk_tags_[s].object_id;
      if (auto it = residue_.find(owner); it != residue_.end() && --it->second == 0) residue_.erase(it);
      touched.push_back(owner);
    }
    chunk_states_[s] = ChunkState::Free;
    chunk_tags_[s] = ChunkTag{};
  }
  deleted_chunks_ -= m.deleted;
  free_chunks_ += m.next_free;

  const auto view = medium_.erase_block(b);
  m = BlockMeta{};
  if (view.is_bad) {
    m.bad = true;
    free_chunks_ -= chunks_per_block();
  } else {
    ++empty_blocks_;
  }
  if (passive_target_ == b) passive_target_.reset();
  if (observer_) observer_->on_block_erased(b, now_);

  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (ObjectId id : touched) settle_unlinked(id);
}

void FileSystem::collect_block(BlockIndex b) {
  for (ChunkIndex c = 0; c < chunks_per_block(); ++c) {
    if (chunk_states_[slot({b, c})] == ChunkState::Live) copy_live_chunk({b, c}, false);
  }
  erase_collected(b);
}

template <typename Done>
std::uint32_t FileSystem::collect_until(Done done) {
  if (gc_active_) return 0;
  GcScope scope(gc_active_);
  std::uint32_t reclaimed = 0;
  while (!done()) {
    const auto victim = aggressive_victim();
    if (!victim) break;
    collect_block(*victim);
    ++reclaimed;
  }
  return reclaimed;
}

std::uint32_t FileSystem::passive_step() {
  if (gc_active_ || config_.passive_gc_copy_budget == 0) return 0;
  std::optional<BlockIndex> victim = passive_target_;
  if (victim) {
    const BlockMeta& m = meta(*victim);
    if (m.bad || !m.in_use || is_current(*victim)) victim.reset();
  }
  if (!victim) victim = passive_victim();
  if (!victim) return 0;

  GcScope scope(gc_active_);
  const BlockIndex b = *victim;
  std::uint32_t copied = 0;
  for (ChunkIndex c = 0; c < chunks_per_block() && copied < config_.passive_gc_copy_budget; ++c) {
    if (chunk_states_[slot({b, c})] != ChunkState::Live) continue;
    if (allocatable_free() <= reserve_chunks()) break;
    copy_live_chunk({b, c}, true);
    ++copied;
  }
  if (meta(b).live == 0) {
    erase_collected(b);
    return 1;
  }
  passive_target_ = b;
  return 0;
}

std::uint32_t FileSystem::garbage_collect(GcMode mode) {
  if (mode == GcMode::Passive) return passive_step();
  return collect_until([this] { return empty_blocks_ >= config_.reserve_blocks; });
}

}  // namespace sdlab::fs
