#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sdlab/records.hpp"

namespace sdlab::metrics {

inline constexpr double kHoursPerYear = 8766.0;  // 365.25 days
inline constexpr std::array<unsigned, 5> kReportedPercentiles = {1, 50, 90, 95, 100};

// Nearest-rank percentile: element ceil(p/100 * n) - 1 of the sorted values.
double nearest_rank(std::span<const double> sorted, unsigned percentile);

struct LatencyStats {
  // Hours, in the order of kReportedPercentiles; empty when nothing resolved.
  std::optional<std::array<double, 5>> percentiles;
  std::optional<double> mean;
  std::size_t n_secrets = 0;   // resolved secrets used for the percentiles
  std::size_t n_censored = 0;  // deleted but never erased within the run
  std::vector<double> latencies_hours;

  double p(unsigned percentile) const;
};

LatencyStats deletion_latency(std::span<const SecretRecord> records);

struct Window {
  Ticks start = 0;
  Ticks end = 0;  // exclusive
};

double allocation_rate(std::span<const AllocationRecord> records, Window window);

double expected_lifetime(double allocs_per_hour, std::uint64_t block_count, std::uint64_t erasure_limit);
double expected_lifetime(double allocs_per_hour, const nand::MediumGeometry& geometry);

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
};

// Student-t interval for the mean of independent per-run values.
ConfidenceInterval confidence_interval(std::span<const double> per_run_values, double level = 0.95);

// Hours between consecutive allocations of each physical block.
std::map<nand::BlockIndex, std::vector<double>> reallocation_periods(std::span<const AllocationRecord> records);

struct WearReport {
  double block_allocs_per_hour = 0.0;
  double ratio_vs_baseline = 0.0;
  std::optional<double> expected_min_lifetime_years;  // assumes uniform wear
  std::uint64_t total_erasures = 0;
  std::uint64_t max_block_erasures = 0;
};

WearReport wear_report(double allocs_per_hour, double baseline_allocs_per_hour, const nand::MediumGeometry& geometry,
                       const nand::WearSummary& wear);

// Spearman rank correlation with average ranks for ties.
double rank_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace sdlab::metrics
