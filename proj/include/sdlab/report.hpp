#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdlab/records.hpp"

namespace sdlab::report {

void write_allocations_csv(std::ostream& out, std::span<const metrics::AllocationRecord> records);
std::vector<metrics::AllocationRecord> read_allocations_csv(std::istream& in);

void write_chunk_writes_csv(std::ostream& out, std::span<const metrics::ChunkWriteRecord> records);

// Patterns are not persisted; missing times are written as NA.
void write_secrets_csv(std::ostream& out, std::span<const metrics::SecretRecord> records);
std::vector<metrics::SecretRecord> read_secrets_csv(std::istream& in);

// One line per simulation run of an experiment directory.
struct ManifestRow {
  std::string config_label;
  std::optional<std::uint64_t> free_blocks_target;
  std::string mechanism;
  std::uint32_t repetition = 0;
  std::uint64_t seed = 0;
  Ticks duration_ticks = 0;
  Ticks warmup_ticks = 0;
  std::uint64_t block_count = 0;
  std::uint64_t erasure_limit = 0;
  std::string run_path;  // relative to the experiment directory
  bool baseline = false;
};

void write_manifest_csv(std::ostream& out, std::span<const ManifestRow> rows);
std::vector<ManifestRow> read_manifest_csv(std::istream& in);

struct ReportRow {
  std::string config_label;
  std::optional<std::uint64_t> free_blocks_target;
  // Means over runs of each run's percentile, hours.
  std::array<std::optional<double>, 5> percentiles;
  std::optional<double> allocs_per_hour;
  std::optional<double> ratio;
  std::optional<double> lifetime_years;
  // 95% half-width of the per-run medians.
  std::optional<double> ci_half_width;
};

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);

// Recomputes the report from manifest.csv and the per-run CSVs under `dir`.
std::vector<ReportRow> build_report(const std::filesystem::path& dir);
// build_report followed by writing dir/report.csv.
std::vector<ReportRow> regenerate_report(const std::filesystem::path& dir);

}  // namespace sdlab::report
