#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdlab/nand_medium.hpp"
#include "sdlab/records.hpp"

namespace sdlab::fs {

using nand::BlockIndex;
using nand::Byte;
using nand::Bytes;
using nand::ChunkIndex;

struct ChunkAddr {
  BlockIndex block = 0;
  ChunkIndex chunk = 0;

  friend auto operator<=>(const ChunkAddr&, const ChunkAddr&) = default;
};

// Out-of-band tag; serialises into the 16-byte spare area.
struct ChunkTag {
  ObjectId object_id = 0;
  std::uint32_t chunk_offset = 0;  // 0 is the header
  std::uint64_t sequence_number = 0;
  std::uint16_t byte_count = 0;
  ChunkKind kind = ChunkKind::Data;
  WriterId writer_id = 0;

  std::array<Byte, nand::kSpareBytes> encode() const;
  static ChunkTag decode(std::span<const Byte> spare);
};

enum class BlockState { Empty, Allocating, Full, Dirty, Bad };
std::string_view block_state_name(BlockState s) noexcept;

struct BlockInfo {
  BlockState state = BlockState::Empty;
  std::uint32_t live_chunks = 0;
  std::uint32_t deleted_chunks = 0;
  std::uint32_t next_free_chunk = 0;
  std::uint64_t sequence_number_at_alloc = 0;
};

struct FileObject {
  ObjectId object_id = 0;
  std::string name;
  std::uint64_t size_bytes = 0;
  std::map<std::uint32_t, ChunkAddr> chunk_map;  // data offsets (>= 1)
  ChunkAddr header;
  WriterId owner = 0;
  bool junk = false;
};

struct FsConfig {
  std::uint32_t reserve_blocks = 5;
  std::uint32_t passive_gc_copy_budget = 4;
  double passive_gc_dirtiness_threshold = 0.5;
  bool zero_overwrite_enabled = false;

  void validate(const nand::MediumGeometry& g) const;
};

// free_chunks follows the YAFFS statistic: never-programmed chunks plus
// deleted ones, i.e. everything the collector could hand out again.
struct FreeSpace {
  std::uint64_t free_chunks = 0;
  std::uint64_t empty_blocks = 0;
  std::uint64_t deleted_chunks = 0;
  std::uint64_t erased_chunks = 0;
};

enum class GcMode { Passive, Aggressive };

// Receives the instrumentation stream. Callbacks must not call back into the
// file system.
class FsObserver {
 public:
  virtual ~FsObserver() = default;
  virtual void on_block_allocated(const metrics::AllocationRecord&) {}
  virtual void on_chunk_written(const metrics::ChunkWriteRecord&) {}
  virtual void on_block_erased(BlockIndex, Ticks) {}
  virtual void on_chunk_zeroed(ChunkAddr, Ticks) {}
};

// First empty block scanning forward cyclically after `last` (0 = none yet).
// `empty[i]` describes block i+1.
std::optional<BlockIndex> find_next_empty(std::span<const std::uint8_t> empty, BlockIndex last);

class FileSystem {
 public:
  FileSystem(nand::MediumGeometry geometry, FsConfig config = {});

  ObjectId create_file(const std::string& name, WriterId owner = 0, bool junk = false);
  std::uint64_t write_file(ObjectId id, std::uint64_t offset_bytes, std::span<const Byte> data);
  Bytes read_file(ObjectId id, std::uint64_t offset_bytes, std::uint64_t length) const;
  Bytes read_file(ObjectId id) const;
  void delete_file(ObjectId id);
  void truncate_file(ObjectId id, std::uint64_t new_size_bytes);

  BlockIndex allocate_block();
  std::uint32_t garbage_collect(GcMode mode);
  // Block the aggressive collector would pick next, if any.
  std::optional<BlockIndex> aggressive_candidate() const { return aggressive_victim(); }

  FreeSpace free_space() const;
  // Free space as reported to applications: free_chunks minus the blocks
  // held back for the collector.
  std::uint64_t user_free_chunks() const;
  BlockInfo block_info(BlockIndex block) const;

  const FileObject& file(ObjectId id) const;
  bool exists(ObjectId id) const { return files_.contains(id); }
  std::optional<ObjectId> find(const std::string& name) const;
  std::vector<ObjectId> file_ids() const;
  // Objects unlinked whose deletion header is still live.
  std::size_t pending_unlinked() const { return unlinked_.size(); }

  // Requires a medium that allows multiple programming when enabling.
  void set_zero_overwrite(bool enabled);
  bool zero_overwrite() const { return config_.zero_overwrite_enabled; }

  void set_time(Ticks now) { now_ = now; }
  Ticks now() const { return now_; }
  void set_observer(FsObserver* observer) { observer_ = observer; }

  const nand::Medium& medium() const { return medium_; }
  const FsConfig& config() const { return config_; }
  const nand::MediumGeometry& geometry() const { return medium_.geometry(); }
  std::uint64_t allocations() const { return block_sequence_; }
  std::uint64_t chunk_writes() const { return write_sequence_; }
  std::optional<ChunkTag> tag_at(ChunkAddr addr) const;

 private:
  enum class ChunkState : std::uint8_t { Free, Live, Deleted };

  // Who is asking for a chunk: user writes must leave the reserve untouched,
  // deletions may dip into it, the collector never triggers further collection.
  enum class Admission { User, Privileged, Collector };

  struct BlockMeta {
    std::uint32_t live = 0;
    std::uint32_t deleted = 0;
    std::uint32_t next_free = 0;
    std::uint64_t seq_at_alloc = 0;
    bool bad = false;
    bool in_use = false;  // allocated since last erase
  };

  std::size_t slot(ChunkAddr a) const;
  BlockMeta& meta(BlockIndex b) { return blocks_[b - 1]; }
  const BlockMeta& meta(BlockIndex b) const { return blocks_[b - 1]; }
  FileObject& file_mut(ObjectId id);

  std::uint32_t chunks_per_block() const;
  std::uint64_t reserve_chunks() const;
  std::uint64_t allocatable_free() const;
  bool is_current(BlockIndex b) const { return current_ && *current_ == b; }

  BlockIndex allocate_block_impl(bool allow_gc);
  ChunkAddr next_chunk(Admission admission);
  void ensure_user_space();
  ChunkAddr program(ChunkTag tag, std::span<const Byte> payload, Admission admission);
  void delete_chunk(ChunkAddr addr, bool allow_zero = true);
  void erase_if_dead(BlockIndex b);
  void settle_unlinked(ObjectId id);
  void relocate(const ChunkTag& tag, ChunkAddr to);

  void write_header(FileObject& f, bool unlinked, Admission admission);
  Bytes chunk_payload(ChunkAddr addr) const;

  std::optional<BlockIndex> aggressive_victim() const;
  std::optional<BlockIndex> passive_victim() const;
  void copy_live_chunk(ChunkAddr from, bool allow_zero);
  void collect_block(BlockIndex b);
  void erase_collected(BlockIndex b);
  template <typename Done>
  std::uint32_t collect_until(Done done);
  std::uint32_t passive_step();

  nand::Medium medium_;
  FsConfig config_;
  std::vector<BlockMeta> blocks_;
  std::vector<ChunkState> chunk_states_;
  std::vector<ChunkTag> chunk_tags_;  // RAM copy of each programmed chunk's tag; id 0 once zeroed
  std::optional<BlockIndex> current_;
  BlockIndex last_allocated_ = 0;
  std::uint64_t block_sequence_ = 0;
  std::uint64_t write_sequence_ = 0;
  std::uint64_t free_chunks_ = 0;
  std::uint64_t deleted_chunks_ = 0;
  std::uint64_t empty_blocks_ = 0;
  ObjectId next_object_id_ = 1;
  std::map<ObjectId, FileObject> files_;
  std::map<ObjectId, ChunkAddr> unlinked_;                // object -> live deletion header
  std::unordered_map<ObjectId, std::uint64_t> residue_;  // chunks still physically holding object data
  std::optional<BlockIndex> passive_target_;
  bool gc_active_ = false;
  Ticks now_ = 0;
  FsObserver* observer_ = nullptr;
};

}  // namespace sdlab::fs
