#include "sdlab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdlab/error.hpp"

namespace sdlab::workload {

std::string_view mechanism_name(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::None: return "none";
    case Mechanism::Ballooning: return "ballooning";
    case Mechanism::Purge: return "purge";
    case Mechanism::ZeroOverwrite: return "zero-overwrite";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view text) {
  for (auto m : {Mechanism::None, Mechanism::Ballooning, Mechanism::Purge, Mechanism::ZeroOverwrite})
    if (mechanism_name(m) == text) return m;
  throw Error(Errc::InvalidConfig, "unknown mechanism '" + std::string(text) + "'");
}

void SimulationConfig::validate() const {
  geometry.validate();
  fs.validate(geometry);
  if (mechanism == Mechanism::Ballooning) {
    ballooning.validate();
    if (balloon_period_ticks == 0) throw Error(Errc::InvalidConfig, "balloon period must be positive");
  }
  if (mechanism == Mechanism::ZeroOverwrite && !geometry.multiple_programming_allowed)
    throw Error(Errc::MediumForbidsReprogram, "zero overwriting needs multiple programming");
  if (probe.enabled) {
    if (probe.period_ticks == 0) throw Error(Errc::InvalidConfig, "probe period must be positive");
    if (probe.pattern_bytes < 8 || probe.pattern_bytes > geometry.chunk_size_bytes)
      throw Error(Errc::InvalidConfig, "probe pattern must be 8 bytes up to one chunk");
  }
  if (warmup_ticks > duration_ticks) throw Error(Errc::InvalidConfig, "warm-up longer than the run");
}

class Simulator::Observer : public fs::FsObserver {
 public:
  explicit Observer(Simulator& sim) : sim_(sim) {}
  void on_block_allocated(const metrics::AllocationRecord& r) override { sim_.result_.allocations.push_back(r); }
  void on_chunk_written(const metrics::ChunkWriteRecord& r) override { sim_.on_chunk_written(r); }
  void on_block_erased(nand::BlockIndex b, Ticks t) override { sim_.on_block_erased(b, t); }
  void on_chunk_zeroed(fs::ChunkAddr a, Ticks t) override { sim_.on_chunk_zeroed(a, t); }

 private:
  Simulator& sim_;
};

Simulator::Simulator(const WorkloadProfile& profile, SimulationConfig config)
    : profile_(profile), config_(std::move(config)), fs_(config_.geometry, config_.fs) {
  config_.validate();
  profile_.validate();
  observer_ = std::make_unique<Observer>(*this);
  fs_.set_observer(observer_.get());
  if (config_.mechanism == Mechanism::ZeroOverwrite) secdel::set_zero_overwrite(fs_, true);
  if (config_.mechanism == Mechanism::Ballooning) agent_.emplace(fs_, config_.ballooning, config_.seed);

  // Each writer draws from its own stream so the workload does not depend on
  // the mechanism under test.
  for (const auto& w : profile_.writers) {
    std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                      std::uint32_t{w.id}, 0x77726974u};
    writer_rngs_.emplace_back(seq);
    writer_serials_.push_back(0);
  }
  std::seed_seq probe_seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                          0x70726f62u};
  probe_rng_.seed(probe_seq);

  for (std::size_t i = 0; i < profile_.writers.size(); ++i)
    schedule(to_interval(profile_.writers[i].inter_creation_time_dist.sample(writer_rngs_[i])), EventKind::Create, i);
  if (agent_) schedule(0, EventKind::Balloon, 0);
  if (config_.probe.enabled) schedule(config_.warmup_ticks, EventKind::Probe, 0);
  if (config_.mechanism == Mechanism::Purge)
    for (Ticks t : config_.purge.at_ticks) schedule(t, EventKind::Purge, 0);

  result_.duration_ticks = config_.duration_ticks;
  result_.warmup_ticks = config_.warmup_ticks;
}

Simulator::~Simulator() { fs_.set_observer(nullptr); }

Ticks Simulator::to_interval(double seconds) {
  if (!std::isfinite(seconds)) return std::numeric_limits<Ticks>::max();
  return std::max<Ticks>(1, static_cast<Ticks>(std::llround(seconds)));
}

void Simulator::schedule(Ticks at, EventKind kind, std::size_t index) {
  if (at >= config_.duration_ticks) return;
  queue_.push(Event{at, next_seq_++, kind, index});
}

bool Simulator::step() {
  if (finished_ || queue_.empty()) return false;
  const Event e = queue_.top();
  queue_.pop();
  now_ = std::max(e.time, fs_.now());
  fs_.set_time(now_);
  dispatch(e);
  settle_secrets();
  ++result_.events_dispatched;
  return true;
}

void Simulator::dispatch(const Event& e) {
  try {
    switch (e.kind) {
      case EventKind::Create: writer_create(e.index); break;
      case EventKind::OpenWrite: open_write(e.index); break;
      case EventKind::Delete: delete_live(e.index); break;
      case EventKind::Probe:
        secret_probe_step(now_);
        schedule(now_ + config_.probe.period_ticks, EventKind::Probe, 0);
        break;
      case EventKind::Balloon:
        agent_->step(now_);
        schedule(now_ + config_.balloon_period_ticks, EventKind::Balloon, 0);
        break;
      case EventKind::Purge: run_purge(); break;
    }
  } catch (const Error& err) {
    if (err.code() != Errc::FileSystemFull) throw;
    ++result_.fs_full_events;
  }
}

void Simulator::writer_create(std::size_t writer) {
  const WriterSpec& w = profile_.writers[writer];
  auto& rng = writer_rngs_[writer];
  schedule(now_ + to_interval(w.inter_creation_time_dist.sample(rng)), EventKind::Create, writer);

  std::vector<double> weights;
  for (const auto& [type, p] : w.file_type_dist) weights.push_back(p);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const FileType& type = profile_.file_types.at(w.file_type_dist[pick(rng)].first);
  const double lifetime = type.lifetime_dist.sample(rng);

  const std::string name = w.name + "/" + std::to_string(writer_serials_[writer]++);
  const ObjectId id = fs_.create_file(name, w.id);
  const std::size_t handle = files_.size();
  files_.push_back(LiveFile{id, writer, &type, true});
  schedule(now_, EventKind::OpenWrite, handle);
  if (!type.lifetime_dist.is_never()) schedule(now_ + to_interval(lifetime), EventKind::Delete, handle);
}

void Simulator::open_write(std::size_t file) {
  LiveFile& f = files_[file];
  if (!f.alive) return;
  auto& rng = writer_rngs_[f.writer];
  schedule(now_ + to_interval(f.type->open_period_dist.sample(rng)), EventKind::OpenWrite, file);

  const auto chunks = static_cast<std::uint64_t>(std::llround(f.type->chunks_per_open_dist.sample(rng)));
  const double where = f.type->write_location_dist.sample(rng);
  if (chunks == 0) return;

  const std::uint64_t cs = config_.geometry.chunk_size_bytes;
  const std::uint64_t size = fs_.file(f.id).size_bytes;
  std::uint64_t offset = size;
  if (where < 1.0) {
    const std::uint64_t existing = (size + cs - 1) / cs;
    offset = static_cast<std::uint64_t>(std::floor(where * static_cast<double>(existing))) * cs;
  }
  const nand::Bytes data(chunks * cs, static_cast<nand::Byte>('a' + f.id % 26));
  fs_.write_file(f.id, offset, data);
}

void Simulator::delete_live(std::size_t file) {
  LiveFile& f = files_[file];
  if (!f.alive) return;
  f.alive = false;
  fs_.delete_file(f.id);
}

void Simulator::run_purge() {
  result_.purges.push_back(secdel::purge(fs_, {config_.seed, config_.purge.ticks_per_block}));
  now_ = fs_.now();
}

void Simulator::secret_probe_step(Ticks now) {
  now_ = std::max(now, fs_.now());
  fs_.set_time(now_);
  const auto secret_id = static_cast<std::uint32_t>(secrets_.size());

  metrics::SecretRecord rec;
  rec.secret_id = secret_id;
  rec.pattern = {'S', 'C', 'R', 'T'};
  for (int k = 0; k < 4; ++k) rec.pattern.push_back(static_cast<nand::Byte>(secret_id >> (8 * k)));
  while (rec.pattern.size() < config_.probe.pattern_bytes) rec.pattern.push_back(static_cast<nand::Byte>(probe_rng_()));
  rec.t_written = now_;

  const ObjectId id = fs_.create_file(".secret-" + std::to_string(secret_id), 0);
  secrets_.push_back(rec);
  tracks_.push_back(SecretTrack{{}, id, 0, false});
  secret_by_object_[id] = secret_id;
  try {
    fs_.write_file(id, 0, rec.pattern);
  } catch (const Error& e) {
    if (e.code() != Errc::FileSystemFull) throw;
    // Nothing reached the medium: forget the probe.
    secret_by_object_.erase(id);
    secrets_.pop_back();
    tracks_.pop_back();
    fs_.delete_file(id);
    throw;
  }
  tracks_.back().allocations_at_write = fs_.allocations();
  tracks_.back().pending_delete = true;
}

void Simulator::settle_secrets() {
  bool deleted_any = false;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    SecretTrack& t = tracks_[i];
    if (!t.pending_delete || fs_.allocations() <= t.allocations_at_write) continue;
    secrets_[i].t_deleted = now_;
    try {
      fs_.delete_file(t.object_id);
    } catch (const Error& e) {
      if (e.code() != Errc::FileSystemFull) throw;
      ++result_.fs_full_events;
      secrets_[i].t_deleted.reset();
      continue;
    }
    t.pending_delete = false;
    deleted_any = true;
  }
  if (deleted_any && config_.mechanism == Mechanism::Purge && config_.purge.after_secret_delete) {
    try {
      run_purge();
    } catch (const Error& e) {
      if (e.code() != Errc::FileSystemFull) throw;
      ++result_.fs_full_events;
    }
  }
}

void Simulator::on_chunk_written(const metrics::ChunkWriteRecord& r) {
  if (config_.record_chunk_writes) result_.chunk_writes.push_back(r);
  if (r.kind != ChunkKind::Data) return;
  const auto it = secret_by_object_.find(r.object_id);
  if (it == secret_by_object_.end()) return;
  tracks_[it->second].locations.insert({r.block, r.chunk});
  secrets_[it->second].blocks_touched.insert(r.block);
  secrets_in_block_[r.block].insert(it->second);
}

void Simulator::drop_location(std::size_t secret, fs::ChunkAddr a, Ticks t) {
  SecretTrack& track = tracks_[secret];
  track.locations.erase(a);
  metrics::SecretRecord& rec = secrets_[secret];
  if (track.locations.empty() && rec.t_deleted && !rec.t_erased) rec.t_erased = t;
}

void Simulator::on_block_erased(nand::BlockIndex b, Ticks t) {
  const auto it = secrets_in_block_.find(b);
  if (it == secrets_in_block_.end()) return;
  const std::set<std::size_t> affected = std::move(it->second);
  secrets_in_block_.erase(it);
  for (std::size_t s : affected) {
    auto& locs = tracks_[s].locations;
    for (auto l = locs.lower_bound({b, 0}); l != locs.end() && l->block == b;) {
      const fs::ChunkAddr a = *l++;
      drop_location(s, a, t);
    }
  }
}

void Simulator::on_chunk_zeroed(fs::ChunkAddr a, Ticks t) {
  const auto it = secrets_in_block_.find(a.block);
  if (it == secrets_in_block_.end()) return;
  for (std::size_t s : it->second)
    if (tracks_[s].locations.contains(a)) drop_location(s, a, t);
}

RunResult Simulator::run() {
  while (step()) {
  }
  return finish();
}

RunResult Simulator::finish() {
  finished_ = true;
  for (auto& rec : secrets_) {
    if (rec.t_erased) continue;
    rec.censored = true;
    if (rec.t_deleted) rec.t_erased = config_.duration_ticks;
  }
  result_.secrets = secrets_;
  result_.wear = fs_.medium().wear_summary();
  result_.final_free = fs_.free_space();
  return std::move(result_);
}

RunResult run_simulation(const WorkloadProfile& profile, const SimulationConfig& config) {
  Simulator sim(profile, config);
  return sim.run();
}

}  // namespace sdlab::workload
