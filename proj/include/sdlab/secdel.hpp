#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "sdlab/lsfs.hpp"

namespace sdlab::secdel {

inline constexpr WriterId kPurgeWriter = 0xFF;
inline constexpr WriterId kBalloonWriter = 0xFE;

// Deterministic filler for junk files, keyed by (seed, object id).
nand::Bytes junk_payload(std::uint64_t seed, ObjectId id, std::uint64_t length);

struct PurgeOptions {
  std::uint64_t seed = 0;
  // Simulated time charged per erase block of junk written; 0 makes the
  // purge instantaneous on the simulation clock.
  Ticks ticks_per_block = 0;
};

struct PurgeReport {
  std::uint64_t blocks_erased = 0;
  std::uint64_t chunks_written = 0;
  Ticks duration_ticks = 0;
};

// Fill the file system with one junk file until it reports full, then delete
// the junk. Every chunk deleted before the call has been erased on return.
PurgeReport purge(fs::FileSystem& fs, const PurgeOptions& options = {});

void set_zero_overwrite(fs::FileSystem& fs, bool enabled);

struct BallooningConfig {
  std::uint64_t upper_threshold_chunks = 0;
  std::uint64_t lower_threshold_chunks = 0;
  std::uint32_t junk_file_blocks = 1;
  double min_free_fraction = 0.05;
  std::optional<Ticks> rotation_age_limit;

  void validate() const;

  // Maps a target of free erase blocks onto thresholds: upper = target,
  // lower = target - junk_file_blocks (both converted to chunks).
  static BallooningConfig for_target(std::uint64_t free_blocks_target, std::uint32_t junk_file_blocks,
                                     std::uint64_t chunks_per_block, double min_free_fraction = 0.05);
};

struct JunkEntry {
  ObjectId object_id = 0;
  Ticks creation_time = 0;
  std::uint32_t size_blocks = 0;
};

enum class BalloonAction { None, Created, Deleted, Refreshed };

struct ActionTaken {
  BalloonAction action = BalloonAction::None;
  std::uint32_t count = 0;

  friend bool operator==(const ActionTaken&, const ActionTaken&) = default;
};

// User-space agent that keeps the free space of the file system between two
// thresholds by creating and removing junk files, oldest first.
class BallooningAgent {
 public:
  BallooningAgent(fs::FileSystem& fs, BallooningConfig config, std::uint64_t seed = 0);

  ActionTaken step(Ticks now);

  const std::deque<JunkEntry>& pool() const { return pool_; }
  const BallooningConfig& config() const { return config_; }
  // Free chunks as the agent observes them.
  std::uint64_t observed_free() const { return fs_.user_free_chunks(); }

 private:
  std::uint64_t floor_chunks() const;
  std::uint64_t junk_cost_chunks() const;
  std::optional<JunkEntry> create_junk(Ticks now);
  void delete_oldest();

  fs::FileSystem& fs_;
  BallooningConfig config_;
  std::uint64_t seed_;
  std::uint64_t serial_ = 0;
  std::deque<JunkEntry> pool_;
};

}  // namespace sdlab::secdel
