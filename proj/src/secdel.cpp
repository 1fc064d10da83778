#include "sdlab/secdel.hpp"

#include <cmath>
#include <random>

namespace sdlab::secdel {

nand::Bytes junk_payload(std::uint64_t seed, ObjectId id, std::uint64_t length) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id,
                    0x6a756e6bu};
  std::mt19937_64 rng(seq);
  nand::Bytes out(length);
  for (std::uint64_t i = 0; i < length; i += 8) {
    const std::uint64_t word = rng();
    for (std::uint64_t k = 0; k < 8 && i + k < length; ++k) out[i + k] = static_cast<nand::Byte>(word >> (8 * k));
  }
  return out;
}

PurgeReport purge(fs::FileSystem& fs, const PurgeOptions& options) {
  const auto& g = fs.geometry();
  const std::uint64_t erasures_before = fs.medium().wear_summary().total_erasures;
  const std::uint64_t writes_before = fs.chunk_writes();
  const Ticks start = fs.now();

  std::string name = ".purge";
  for (int n = 1; fs.find(name); ++n) name = ".purge-" + std::to_string(n);
  const ObjectId junk = fs.create_file(name, kPurgeWriter, true);

  // One erase block of data per append.
  const std::uint64_t unit = g.block_bytes();
  std::uint64_t appended = 0;
  for (;;) {
    const nand::Bytes data = junk_payload(options.seed ^ appended, junk, unit);
    try {
      fs.write_file(junk, fs.file(junk).size_bytes, data);
    } catch (const Error& e) {
      if (e.code() != Errc::FileSystemFull) throw;
      break;
    }
    ++appended;
    if (options.ticks_per_block) fs.set_time(fs.now() + options.ticks_per_block);
  }
  fs.delete_file(junk);

  PurgeReport report;
  report.blocks_erased = fs.medium().wear_summary().total_erasures - erasures_before;
  report.chunks_written = fs.chunk_writes() - writes_before;
  report.duration_ticks = fs.now() - start;
  return report;
}

void set_zero_overwrite(fs::FileSystem& fs, bool enabled) { fs.set_zero_overwrite(enabled); }

void BallooningConfig::validate() const {
  if (lower_threshold_chunks >= upper_threshold_chunks)
    throw Error(Errc::InvalidConfig, "lower threshold must be below the upper threshold");
  if (junk_file_blocks < 1) throw Error(Errc::InvalidConfig, "junk_file_blocks must be >= 1");
  if (!(min_free_fraction >= 0.0 && min_free_fraction < 1.0))
    throw Error(Errc::InvalidConfig, "min_free_fraction must be in [0, 1)");
}

BallooningConfig BallooningConfig::for_target(std::uint64_t free_blocks_target, std::uint32_t junk_file_blocks,
                                              std::uint64_t chunks_per_block, double min_free_fraction) {
  BallooningConfig c;
  c.junk_file_blocks = junk_file_blocks;
  c.min_free_fraction = min_free_fraction;
  c.upper_threshold_chunks = free_blocks_target * chunks_per_block;
  const std::uint64_t lower_blocks = free_blocks_target > junk_file_blocks ? free_blocks_target - junk_file_blocks : 0;
  c.lower_threshold_chunks = lower_blocks * chunks_per_block;
  c.validate();
  return c;
}

BallooningAgent::BallooningAgent(fs::FileSystem& fs, BallooningConfig config, std::uint64_t seed)
    : fs_(fs), config_(config), seed_(seed) {
  config_.validate();
}

std::uint64_t BallooningAgent::floor_chunks() const {
  const auto& g = fs_.geometry();
  const auto blocks = static_cast<std::uint64_t>(std::ceil(config_.min_free_fraction * static_cast<double>(g.block_count)));
  return blocks * g.chunks_per_block;
}

// Data chunks plus the header that accompanies the write.
std::uint64_t BallooningAgent::junk_cost_chunks() const {
  return std::uint64_t{config_.junk_file_blocks} * fs_.geometry().chunks_per_block + 1;
}

std::optional<JunkEntry> BallooningAgent::create_junk(Ticks now) {
  const std::uint64_t free = observed_free();
  if (free < junk_cost_chunks() || free - junk_cost_chunks() < floor_chunks()) return std::nullopt;

  std::string name = ".balloon-" + std::to_string(serial_++);
  while (fs_.find(name)) name = ".balloon-" + std::to_string(serial_++);
  ObjectId id = 0;
  try {
    id = fs_.create_file(name, kBalloonWriter, true);
    const std::uint64_t bytes = std::uint64_t{config_.junk_file_blocks} * fs_.geometry().block_bytes();
    fs_.write_file(id, 0, junk_payload(seed_, id, bytes));
  } catch (const Error& e) {
    if (e.code() != Errc::FileSystemFull) throw;
    if (id != 0) fs_.delete_file(id);
    return std::nullopt;
  }
  JunkEntry entry{id, now, config_.junk_file_blocks};
  return entry;
}

void BallooningAgent::delete_oldest() {
  fs_.delete_file(pool_.front().object_id);
  pool_.pop_front();
}

ActionTaken BallooningAgent::step(Ticks now) {
  std::uint32_t created = 0;
  while (observed_free() > config_.upper_threshold_chunks) {
    auto entry = create_junk(now);
    if (!entry) break;
    pool_.push_back(*entry);
    ++created;
  }
  if (created) return {BalloonAction::Created, created};

  std::uint32_t deleted = 0;
  while (observed_free() < config_.lower_threshold_chunks && !pool_.empty()) {
    delete_oldest();
    ++deleted;
  }
  if (deleted) return {BalloonAction::Deleted, deleted};

  std::uint32_t refreshed = 0;
  if (config_.rotation_age_limit) {
    // Oldest first; the replacement is written before the old file goes.
    while (!pool_.empty() && now - pool_.front().creation_time > *config_.rotation_age_limit) {
      auto entry = create_junk(now);
      if (!entry) break;
      delete_oldest();
      pool_.push_back(*entry);
      ++refreshed;
    }
  }
  if (refreshed) return {BalloonAction::Refreshed, refreshed};
  return {};
}

}  // namespace sdlab::secdel
