#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdlab/lsfs.hpp"
#include "sdlab/records.hpp"
#include "sdlab/secdel.hpp"
#include "sdlab/workload.hpp"

namespace sdlab::workload {

enum class Mechanism { None, Ballooning, Purge, ZeroOverwrite };

std::string_view mechanism_name(Mechanism m) noexcept;
Mechanism parse_mechanism(std::string_view text);

struct ProbeConfig {
  bool enabled = true;
  Ticks period_ticks = 1800;
  std::size_t pattern_bytes = 32;
};

struct PurgeSchedule {
  std::vector<Ticks> at_ticks;
  bool after_secret_delete = false;
  Ticks ticks_per_block = 0;
};

struct SimulationConfig {
  nand::MediumGeometry geometry;
  fs::FsConfig fs;
  Mechanism mechanism = Mechanism::None;
  secdel::BallooningConfig ballooning;
  Ticks balloon_period_ticks = 60;
  PurgeSchedule purge;
  ProbeConfig probe;
  Ticks duration_ticks = 0;
  // Probes start after the warm-up; allocation rates are measured from it.
  Ticks warmup_ticks = 0;
  std::uint64_t seed = 0;
  bool record_chunk_writes = true;

  void validate() const;
};

struct RunResult {
  std::vector<metrics::AllocationRecord> allocations;
  std::vector<metrics::ChunkWriteRecord> chunk_writes;
  std::vector<metrics::SecretRecord> secrets;
  nand::WearSummary wear;
  fs::FreeSpace final_free;
  std::vector<secdel::PurgeReport> purges;
  std::uint64_t fs_full_events = 0;
  std::uint64_t events_dispatched = 0;
  Ticks duration_ticks = 0;
  Ticks warmup_ticks = 0;
};

// Discrete-event driver: profile writers, the secret probe and the selected
// deletion mechanism share one file system and one clock.
class Simulator {
 public:
  Simulator(const WorkloadProfile& profile, SimulationConfig config);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Dispatches the next event before the end of the run; false when none is left.
  bool step();
  RunResult run();
  // Closes the run: unresolved secrets become censored.
  RunResult finish();

  // Writes a one-chunk secret now; it is deleted after the next block allocation.
  void secret_probe_step(Ticks now);

  Ticks now() const { return now_; }
  const fs::FileSystem& fs() const { return fs_; }
  const std::vector<metrics::SecretRecord>& secrets() const { return secrets_; }

 private:
  enum class EventKind { Create, OpenWrite, Delete, Probe, Balloon, Purge };
  struct Event {
    Ticks time;
    std::uint64_t seq;
    EventKind kind;
    std::size_t index;

    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  struct LiveFile {
    ObjectId id = 0;
    std::size_t writer = 0;
    const FileType* type = nullptr;
    bool alive = true;
  };
  struct SecretTrack {
    std::set<fs::ChunkAddr> locations;
    ObjectId object_id = 0;
    std::uint64_t allocations_at_write = 0;
    bool pending_delete = false;
  };
  class Observer;

  void schedule(Ticks at, EventKind kind, std::size_t index);
  void dispatch(const Event& e);
  void writer_create(std::size_t writer);
  void open_write(std::size_t file);
  void delete_live(std::size_t file);
  void run_purge();
  void settle_secrets();

  void on_chunk_written(const metrics::ChunkWriteRecord& r);
  void on_block_erased(nand::BlockIndex b, Ticks t);
  void on_chunk_zeroed(fs::ChunkAddr a, Ticks t);
  void drop_location(std::size_t secret, fs::ChunkAddr a, Ticks t);

  static Ticks to_interval(double seconds);

  const WorkloadProfile& profile_;
  SimulationConfig config_;
  fs::FileSystem fs_;
  std::unique_ptr<Observer> observer_;
  std::optional<secdel::BallooningAgent> agent_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  Ticks now_ = 0;
  bool finished_ = false;

  std::vector<std::mt19937_64> writer_rngs_;
  std::vector<std::uint64_t> writer_serials_;
  std::vector<LiveFile> files_;
  std::mt19937_64 probe_rng_;

  std::vector<metrics::SecretRecord> secrets_;
  std::vector<SecretTrack> tracks_;
  std::unordered_map<ObjectId, std::size_t> secret_by_object_;
  std::unordered_map<nand::BlockIndex, std::set<std::size_t>> secrets_in_block_;

  RunResult result_;
};

RunResult run_simulation(const WorkloadProfile& profile, const SimulationConfig& config);

}  // namespace sdlab::workload
