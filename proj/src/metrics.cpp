#include "sdlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "sdlab/error.hpp"

namespace sdlab::metrics {

double nearest_rank(std::span<const double> sorted, unsigned percentile) {
  if (sorted.empty()) throw Error(Errc::NoRecords, "percentile of an empty list");
  if (percentile == 0 || percentile > 100) throw Error(Errc::InvalidConfig, "percentile must be in 1..100");
  const std::size_t n = sorted.size();
  std::size_t rank = (std::size_t{percentile} * n + 99) / 100;  // ceil(p*n/100)
  if (rank == 0) rank = 1;
  return sorted[rank - 1];
}

double LatencyStats::p(unsigned percentile) const {
  if (!percentiles) throw Error(Errc::NoRecords, "no resolved secrets");
  for (std::size_t i = 0; i < kReportedPercentiles.size(); ++i)
    if (kReportedPercentiles[i] == percentile) return (*percentiles)[i];
  throw Error(Errc::InvalidConfig, "percentile not reported");
}

LatencyStats deletion_latency(std::span<const SecretRecord> records) {
  if (records.empty()) throw Error(Errc::NoRecords, "no secret records");
  LatencyStats stats;
  for (const auto& r : records) {
    if (!r.t_deleted) continue;
    if (r.censored || !r.t_erased) {
      ++stats.n_censored;
      continue;
    }
    stats.latencies_hours.push_back(static_cast<double>(*r.t_erased - *r.t_deleted) / kTicksPerHour);
  }
  std::sort(stats.latencies_hours.begin(), stats.latencies_hours.end());
  stats.n_secrets = stats.latencies_hours.size();
  if (stats.n_secrets > 0) {
    std::array<double, 5> ps{};
    for (std::size_t i = 0; i < kReportedPercentiles.size(); ++i)
      ps[i] = nearest_rank(stats.latencies_hours, kReportedPercentiles[i]);
    stats.percentiles = ps;
    stats.mean = std::accumulate(stats.latencies_hours.begin(), stats.latencies_hours.end(), 0.0) /
                 static_cast<double>(stats.n_secrets);
  }
  return stats;
}

double allocation_rate(std::span<const AllocationRecord> records, Window window) {
  if (window.end <= window.start) throw Error(Errc::EmptyWindow, "window has no duration");
  const auto count = std::count_if(records.begin(), records.end(), [&](const AllocationRecord& r) {
    return r.time_ticks >= window.start && r.time_ticks < window.end;
  });
  const double hours = static_cast<double>(window.end - window.start) / kTicksPerHour;
  return static_cast<double>(count) / hours;
}

double expected_lifetime(double allocs_per_hour, std::uint64_t block_count, std::uint64_t erasure_limit) {
  if (!(allocs_per_hour > 0.0)) throw Error(Errc::ZeroRate, "allocation rate must be positive");
  return static_cast<double>(block_count) * static_cast<double>(erasure_limit) / (allocs_per_hour * kHoursPerYear);
}

double expected_lifetime(double allocs_per_hour, const nand::MediumGeometry& geometry) {
  return expected_lifetime(allocs_per_hour, geometry.block_count, geometry.erasure_limit);
}

ConfidenceInterval confidence_interval(std::span<const double> values, double level) {
  if (values.size() < 2) throw Error(Errc::TooFewRuns, "need at least two runs");
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidConfig, "confidence level must be in (0, 1)");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  return {mean, t * sd / std::sqrt(n)};
}

std::map<nand::BlockIndex, std::vector<double>> reallocation_periods(std::span<const AllocationRecord> records) {
  std::map<nand::BlockIndex, std::vector<double>> periods;
  std::map<nand::BlockIndex, Ticks> last_seen;
  for (const auto& r : records) {
    auto [it, inserted] = last_seen.try_emplace(r.physical_block, r.time_ticks);
    auto& list = periods[r.physical_block];
    if (!inserted) {
      list.push_back(static_cast<double>(r.time_ticks - it->second) / kTicksPerHour);
      it->second = r.time_ticks;
    }
  }
  return periods;
}

WearReport wear_report(double allocs_per_hour, double baseline_allocs_per_hour, const nand::MediumGeometry& geometry,
                       const nand::WearSummary& wear) {
  WearReport w;
  w.block_allocs_per_hour = allocs_per_hour;
  w.ratio_vs_baseline = baseline_allocs_per_hour > 0.0 ? allocs_per_hour / baseline_allocs_per_hour : 0.0;
  if (allocs_per_hour > 0.0) w.expected_min_lifetime_years = expected_lifetime(allocs_per_hour, geometry);
  w.total_erasures = wear.total_erasures;
  w.max_block_erasures = wear.max_erase_count;
  return w;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double rank_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw Error(Errc::InvalidConfig, "need two equal-length series");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace sdlab::metrics
