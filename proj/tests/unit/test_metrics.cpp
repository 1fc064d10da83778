#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "sdlab/metrics.hpp"

using namespace sdlab;
using namespace sdlab::metrics;

namespace {

SecretRecord secret(Ticks t1, std::optional<Ticks> t2, bool censored = false) {
  SecretRecord r;
  r.t_written = t1;
  r.t_deleted = t1;
  r.t_erased = t2;
  r.censored = censored;
  return r;
}

AllocationRecord alloc(Ticks t, nand::BlockIndex b = 1, std::uint64_t seq = 0) {
  AllocationRecord r;
  r.time_ticks = t;
  r.physical_block = b;
  r.sequence_number = seq;
  return r;
}

}  // namespace

TEST_CASE("deletion latency of one record") {
  const std::vector<SecretRecord> rs{secret(25, 40)};
  const auto s = deletion_latency(rs);
  REQUIRE(s.percentiles.has_value());
  CHECK(s.p(50) == doctest::Approx(15.0 / 3600.0));
  // A singleton gives the same value for every percentile.
  for (unsigned p : kReportedPercentiles) CHECK(s.p(p) == doctest::Approx(15.0 / 3600.0));
  CHECK(s.n_secrets == 1);
}

TEST_CASE("nearest-rank percentiles of 1..100 hours") {
  std::vector<SecretRecord> rs;
  for (int h = 100; h >= 1; --h) rs.push_back(secret(0, h * 3600));
  const auto s = deletion_latency(rs);
  CHECK(s.p(1) == doctest::Approx(1));
  CHECK(s.p(50) == doctest::Approx(50));
  CHECK(s.p(90) == doctest::Approx(90));
  CHECK(s.p(95) == doctest::Approx(95));
  CHECK(s.p(100) == doctest::Approx(100));
  CHECK(*s.mean == doctest::Approx(50.5));
}

TEST_CASE("nearest rank agrees with the textbook definition") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 40);
    for (auto& x : v) x = static_cast<double>(rng() % 1000);
    std::sort(v.begin(), v.end());
    for (unsigned p = 1; p <= 100; ++p) {
      // Smallest value with at least p% of the data at or below it.
      double expect = v.back();
      for (double x : v) {
        const auto at_or_below = std::count_if(v.begin(), v.end(), [&](double y) { return y <= x; });
        if (100.0 * static_cast<double>(at_or_below) >= p * static_cast<double>(v.size())) {
          expect = x;
          break;
        }
      }
      CHECK(nearest_rank(v, p) == expect);
    }
  }
}

TEST_CASE("censored and unfinished secrets") {
  std::vector<SecretRecord> rs{secret(0, 3600), secret(0, 7200, true)};
  SecretRecord never_deleted;
  rs.push_back(never_deleted);
  const auto s = deletion_latency(rs);
  CHECK(s.n_secrets == 1);
  CHECK(s.n_censored == 1);
  CHECK(s.p(100) == doctest::Approx(1));

  const std::vector<SecretRecord> only_censored{secret(0, 10, true)};
  CHECK_FALSE(deletion_latency(only_censored).percentiles.has_value());
  CHECK_ERRC(deletion_latency(std::span<const SecretRecord>{}), Errc::NoRecords);
}

TEST_CASE("percentiles never decrease with rank") {
  std::mt19937_64 rng(8);
  std::vector<SecretRecord> rs;
  for (int i = 0; i < 57; ++i) rs.push_back(secret(0, static_cast<Ticks>(rng() % 100000)));
  const auto s = deletion_latency(rs);
  for (std::size_t i = 1; i < kReportedPercentiles.size(); ++i)
    CHECK((*s.percentiles)[i] >= (*s.percentiles)[i - 1]);
}

TEST_CASE("allocation rate") {
  std::vector<AllocationRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(alloc(i * 700));
  CHECK(allocation_rate(rs, {0, 7200}) == doctest::Approx(5.0));
  CHECK_ERRC(allocation_rate(rs, {100, 100}), Errc::EmptyWindow);
  CHECK_ERRC(allocation_rate(rs, {200, 100}), Errc::EmptyWindow);
  // The window end is exclusive.
  CHECK(allocation_rate(rs, {0, 700}) == doctest::Approx(3600.0 / 700.0));
}

TEST_CASE("rate over a window equals the weighted rates of its pieces") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AllocationRecord> rs;
    Ticks t = 0;
    for (int i = 0; i < 200; ++i) rs.push_back(alloc(t += static_cast<Ticks>(rng() % 400)));
    const Ticks end = t + 1;
    const Ticks cut = 1 + static_cast<Ticks>(rng() % static_cast<std::uint64_t>(end - 1));
    const double whole = allocation_rate(rs, {0, end});
    const double h1 = static_cast<double>(cut) / 3600.0, h2 = static_cast<double>(end - cut) / 3600.0;
    const double pieces = (allocation_rate(rs, {0, cut}) * h1 + allocation_rate(rs, {cut, end}) * h2) / (h1 + h2);
    CHECK(whole == doctest::Approx(pieces));
    // rate × hours is the record count.
    CHECK(std::llround(whole * (static_cast<double>(end) / 3600.0)) == 200);
  }
}

TEST_CASE("expected lifetime reproduces the published table") {
  const nand::MediumGeometry phone{2048, 64, 1571, 10000, true};
  CHECK(std::abs(expected_lifetime(32.57, phone) - 55.1) <= 0.1);
  CHECK(std::abs(expected_lifetime(52.54, phone) - 34.1) <= 0.1);
  CHECK(std::abs(expected_lifetime(196.00, phone) - 9.1) <= 0.1);
  CHECK(std::abs(expected_lifetime(325.37, phone) - 5.5) <= 0.1);
  CHECK(expected_lifetime(1.0, 8766, 1) == doctest::Approx(1.0));
  CHECK_ERRC(expected_lifetime(0.0, phone), Errc::ZeroRate);
  CHECK_ERRC(expected_lifetime(-1.0, phone), Errc::ZeroRate);
}

TEST_CASE("expected lifetime scaling") {
  CHECK(expected_lifetime(10, 100, 1000) > expected_lifetime(11, 100, 1000));
  CHECK(expected_lifetime(10, 200, 1000) == doctest::Approx(2 * expected_lifetime(10, 100, 1000)));
  CHECK(expected_lifetime(10, 100, 3000) == doctest::Approx(3 * expected_lifetime(10, 100, 1000)));
}

TEST_CASE("confidence interval") {
  const std::vector<double> same(8, 3.25);
  const auto flat = confidence_interval(same);
  CHECK(flat.mean == doctest::Approx(3.25));
  CHECK(flat.half_width == doctest::Approx(0.0));

  std::vector<double> v(8);
  std::iota(v.begin(), v.end(), 1.0);
  const auto ci = confidence_interval(v);
  CHECK(ci.mean == doctest::Approx(4.5));
  // t(7, 0.975) = 2.3646 from a t table; s = sqrt(6).
  CHECK(ci.half_width == doctest::Approx(2.3646 * std::sqrt(6.0) / std::sqrt(8.0)).epsilon(1e-4));
  CHECK(ci.half_width == doctest::Approx(2.048).epsilon(1e-3));

  // t(1, 0.975) = 12.706.
  const std::vector<double> two{1.0, 3.0};
  CHECK(confidence_interval(two).half_width == doctest::Approx(12.706 * std::sqrt(2.0) / std::sqrt(2.0)).epsilon(1e-4));

  const std::vector<double> one{1.0};
  CHECK_ERRC(confidence_interval(one), Errc::TooFewRuns);
  CHECK_ERRC(confidence_interval(v, 1.5), Errc::InvalidConfig);
}

TEST_CASE("reallocation periods") {
  const std::vector<AllocationRecord> rs{alloc(0, 3), alloc(10 * 3600, 5), alloc(30 * 3600, 3), alloc(31 * 3600, 7),
                                         alloc(36 * 3600, 3)};
  const auto p = reallocation_periods(rs);
  REQUIRE(p.contains(3));
  CHECK(p.at(3) == std::vector<double>{30.0, 6.0});
  CHECK(p.at(5).empty());
  CHECK(p.at(7).empty());
  CHECK(reallocation_periods(std::span<const AllocationRecord>{}).empty());
}

TEST_CASE("wear report") {
  nand::WearSummary w;
  w.erase_counts = {3, 9, 1};
  w.total_erasures = 13;
  w.max_erase_count = 9;
  const nand::MediumGeometry g{2048, 64, 1571, 10000, true};
  const auto r = wear_report(65.14, 32.57, g, w);
  CHECK(r.ratio_vs_baseline == doctest::Approx(2.0));
  CHECK(*r.expected_min_lifetime_years == doctest::Approx(expected_lifetime(65.14, g)));
  CHECK(r.total_erasures == 13);
  CHECK(r.max_block_erasures == 9);
  CHECK_FALSE(wear_report(0.0, 32.57, g, w).expected_min_lifetime_years.has_value());
}

TEST_CASE("rank correlation") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{10, 20, 30, 40, 50};
  const std::vector<double> down{5, 4, 3, 2, 1};
  CHECK(rank_correlation(x, up) == doctest::Approx(1.0));
  CHECK(rank_correlation(x, down) == doctest::Approx(-1.0));
  // Ties get average ranks: ranks of y are 1.5, 1.5, 3, 4, 5.
  const std::vector<double> tied{1, 1, 2, 3, 4};
  const double mx = 3, my = 3;
  const double rx[] = {1, 2, 3, 4, 5}, ry[] = {1.5, 1.5, 3, 4, 5};
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  CHECK(rank_correlation(x, tied) == doctest::Approx(sxy / std::sqrt(sxx * syy)));
  const std::vector<double> short_y{1, 2};
  CHECK_ERRC(rank_correlation(x, short_y), Errc::InvalidConfig);
}
