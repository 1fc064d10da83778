#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "helpers.hpp"
#include "sdlab/simulation.hpp"
#include "sdlab/workload.hpp"

using namespace sdlab;
using namespace sdlab::workload;

namespace {

constexpr const char* kTinyProfile = R"(
[profile]
name = tiny
description = two file types on a small medium

[writer.a]
id = 1
inter_creation_time_dist = exponential(60)
file_type_dist = small:0.7, big:0.3

[writer.b]
id = 2
inter_creation_time_dist = uniform(100, 300)
file_type_dist = small:1

[filetype.small]
lifetime_dist = exponential(600)
open_period_dist = exponential(120)
chunks_per_open_dist = constant(1)
write_location_dist = constant(1)

[filetype.big]
lifetime_dist = exponential(3600)
open_period_dist = constant(1000000000)
chunks_per_open_dist = uniform(4, 12)
write_location_dist = uniform(0, 1.5)
)";

SimulationConfig tiny_config(Ticks hours = 6, std::uint64_t seed = 1) {
  SimulationConfig c;
  c.geometry = {256, 16, 64, 100000, true};
  c.fs.reserve_blocks = 3;
  c.duration_ticks = hours * 3600;
  c.probe.period_ticks = 600;
  c.seed = seed;
  return c;
}

double mean_of(const Distribution& d, std::uint64_t seed, int n = 20000) {
  std::mt19937_64 rng(seed);
  double s = 0;
  for (int i = 0; i < n; ++i) s += d.sample(rng);
  return s / n;
}

}  // namespace

TEST_CASE("distribution parsing") {
  CHECK(Distribution::parse("constant(3)").to_string() == "constant(3)");
  CHECK(Distribution::parse(" uniform( 1 , 2.5 ) ").to_string() == "uniform(1, 2.5)");
  CHECK(Distribution::parse("exponential(600)").to_string() == "exponential(600)");
  CHECK(Distribution::parse("empirical(1:0.25, 4:0.75)").to_string() == "empirical(1:0.25, 4:0.75)");
  CHECK(Distribution::parse("never").is_never());

  CHECK_ERRC(Distribution::parse("exponential(-5)"), Errc::ParseError);
  CHECK_ERRC(Distribution::parse("constant(-1)"), Errc::ParseError);
  CHECK_ERRC(Distribution::parse("uniform(3, 1)"), Errc::ParseError);
  CHECK_ERRC(Distribution::parse("uniform(1)"), Errc::ParseError);
  CHECK_ERRC(Distribution::parse("exponential(abc)"), Errc::ParseError);
  CHECK_ERRC(Distribution::parse("empirical()"), Errc::ParseError);
  CHECK_ERRC(Distribution::parse("gaussian(1, 2)"), Errc::UnknownDistribution);
  CHECK_ERRC(Distribution::parse("pareto(2)"), Errc::UnknownDistribution);
}

TEST_CASE("distribution sampling") {
  CHECK(mean_of(Distribution::parse("constant(7)"), 1) == doctest::Approx(7));
  CHECK(mean_of(Distribution::parse("uniform(2, 4)"), 2) == doctest::Approx(3).epsilon(0.02));
  CHECK(mean_of(Distribution::parse("exponential(50)"), 3) == doctest::Approx(50).epsilon(0.05));
  CHECK(mean_of(Distribution::parse("empirical(1:1, 5:3)"), 4) == doctest::Approx(4).epsilon(0.03));
  std::mt19937_64 rng(1);
  CHECK(std::isinf(Distribution::parse("never").sample(rng)));
  CHECK(Distribution::parse("exponential(1)").strictly_positive());
  CHECK_FALSE(Distribution::parse("uniform(0, 1)").strictly_positive());
}

TEST_CASE("profile loading") {
  const auto p = load_profile(kTinyProfile);
  CHECK(p.name == "tiny");
  REQUIRE(p.writers.size() == 2);
  CHECK(p.writers[0].name == "a");
  CHECK(p.writers[0].file_type_dist.size() == 2);
  CHECK(p.file_types.at("big").chunks_per_open_dist.to_string() == "uniform(4, 12)");

  SUBCASE("negative mean") {
    std::string doc = kTinyProfile;
    doc.replace(doc.find("exponential(600)"), 16, "exponential(-600)");
    CHECK_ERRC(load_profile(doc), Errc::ParseError);
  }
  SUBCASE("unknown distribution name") {
    std::string doc = kTinyProfile;
    doc.replace(doc.find("exponential(600)"), 16, "lognormal(600)");
    CHECK_ERRC(load_profile(doc), Errc::UnknownDistribution);
  }
  SUBCASE("probabilities must sum to one") {
    std::string doc = kTinyProfile;
    doc.replace(doc.find("small:0.7"), 9, "small:0.6");
    CHECK_ERRC(load_profile(doc), Errc::ParseError);
  }
  SUBCASE("unknown file type") {
    std::string doc = kTinyProfile;
    doc.replace(doc.find("small:1"), 7, "huge:1");
    CHECK_ERRC(load_profile(doc), Errc::ParseError);
  }
  SUBCASE("creation times must be positive") {
    std::string doc = kTinyProfile;
    doc.replace(doc.find("uniform(100, 300)"), 17, "uniform(0, 300)");
    CHECK_ERRC(load_profile(doc), Errc::ParseError);
  }
  SUBCASE("unknown key") {
    std::string doc = kTinyProfile;
    doc += "colour = blue\n";
    CHECK_ERRC(load_profile(doc), Errc::ParseError);
  }
}

TEST_CASE("profile round trip reaches a canonical form") {
  const auto canonical = serialize_profile(load_profile(kTinyProfile));
  CHECK(serialize_profile(load_profile(canonical)) == canonical);

  std::mt19937_64 rng(17);
  const char* families[] = {"constant", "uniform", "exponential", "empirical"};
  for (int trial = 0; trial < 50; ++trial) {
    auto num = [&] { return std::to_string(1 + rng() % 1000) + "." + std::to_string(rng() % 100); };
    auto dist = [&] {
      const std::string f = families[rng() % 4];
      if (f == "uniform") return f + "(" + num() + "," + std::to_string(2000 + rng() % 100) + ")";
      if (f == "empirical") return f + "(" + num() + ":1," + num() + ":3)";
      return f + "(" + num() + ")";
    };
    std::string doc = "[profile]\nname = r\n[writer.w]\nid = " + std::to_string(1 + rng() % 200) +
                      "\ninter_creation_time_dist = " + dist() + "\nfile_type_dist = t:0.25, u:0.75\n";
    for (const char* t : {"t", "u"}) {
      doc += std::string("[filetype.") + t + "]\nlifetime_dist = " + dist() + "\nopen_period_dist = " + dist() +
             "\nchunks_per_open_dist = " + dist() + "\nwrite_location_dist = " + dist() + "\n";
    }
    const auto once = serialize_profile(load_profile(doc));
    CHECK(serialize_profile(load_profile(once)) == once);
  }
}

TEST_CASE("bundled profile parses") {
  const auto p = load_profile_file(std::string(SDLAB_SOURCE_DIR) + "/profiles/android-like.ini");
  CHECK(p.name == "android-like");
  CHECK(p.writers.size() == 5);
  CHECK(p.file_types.at("package").lifetime_dist.is_never());
}

TEST_CASE("mechanism names") {
  for (auto m : {Mechanism::None, Mechanism::Ballooning, Mechanism::Purge, Mechanism::ZeroOverwrite})
    CHECK(parse_mechanism(mechanism_name(m)) == m);
  CHECK_ERRC(parse_mechanism("shred"), Errc::InvalidConfig);
}

TEST_CASE("duration zero produces empty logs") {
  auto c = tiny_config();
  c.duration_ticks = 0;
  const auto r = run_simulation(load_profile(kTinyProfile), c);
  CHECK(r.allocations.empty());
  CHECK(r.chunk_writes.empty());
  CHECK(r.secrets.empty());
  CHECK(r.wear.total_erasures == 0);
}

TEST_CASE("identical seeds give identical runs") {
  const auto p = load_profile(kTinyProfile);
  const auto a = run_simulation(p, tiny_config(6, 5));
  const auto b = run_simulation(p, tiny_config(6, 5));
  const auto c = run_simulation(p, tiny_config(6, 6));
  CHECK(a.allocations == b.allocations);
  CHECK(a.chunk_writes.size() == b.chunk_writes.size());
  CHECK(a.wear.erase_counts == b.wear.erase_counts);
  REQUIRE(a.secrets.size() == b.secrets.size());
  for (std::size_t i = 0; i < a.secrets.size(); ++i) {
    CHECK(a.secrets[i].pattern == b.secrets[i].pattern);
    CHECK(a.secrets[i].t_erased == b.secrets[i].t_erased);
  }
  CHECK(a.allocations != c.allocations);
}

TEST_CASE("secret timelines are well formed") {
  const auto p = load_profile(kTinyProfile);
  const auto r = run_simulation(p, tiny_config(12, 2));
  REQUIRE(r.secrets.size() >= 10);
  std::size_t resolved = 0, censored = 0;
  std::set<nand::Bytes> patterns;
  for (const auto& s : r.secrets) {
    patterns.insert(s.pattern);
    CHECK(s.pattern.size() == 32);
    if (s.t_deleted) CHECK(s.t_written <= *s.t_deleted);
    if (s.t_erased) {
      REQUIRE(s.t_deleted);
      CHECK(*s.t_deleted <= *s.t_erased);
    }
    if (s.censored) {
      ++censored;
    } else {
      ++resolved;
      CHECK(*s.t_erased > *s.t_deleted);  // baseline: erasure needs a later collection
    }
    CHECK_FALSE(s.blocks_touched.empty());
  }
  CHECK(patterns.size() == r.secrets.size());
  CHECK(resolved > 0);
  CHECK(censored > 0);
}

TEST_CASE("t2 matches the first snapshot where the pattern is gone") {
  const auto p = load_profile(kTinyProfile);
  for (std::uint64_t seed : {3u, 4u}) {
    CAPTURE(seed);
    Simulator sim(p, tiny_config(8, seed));
    std::map<std::size_t, Ticks> gone_at;
    std::size_t checked = 0;
    while (sim.step()) {
      const auto& secrets = sim.secrets();
      for (std::size_t i = 0; i < secrets.size(); ++i) {
        const auto& s = secrets[i];
        if (gone_at.contains(i)) continue;
        const bool present = !sim.fs().medium().raw_scan(s.pattern).empty();
        if (!s.t_deleted) {
          CHECK(present);
        } else if (!present) {
          gone_at[i] = sim.now();
          REQUIRE(s.t_erased.has_value());
          CHECK(*s.t_erased == sim.now());
          ++checked;
        } else {
          CHECK_FALSE(s.t_erased.has_value());
        }
      }
    }
    CHECK(checked > 3);
  }
}

TEST_CASE("allocation records match the file system's allocation count") {
  const auto p = load_profile(kTinyProfile);
  auto c = tiny_config(6, 8);
  Simulator sim(p, c);
  const auto r = sim.run();
  CHECK(r.allocations.size() == sim.fs().allocations());
  for (std::size_t i = 1; i < r.allocations.size(); ++i) {
    CHECK(r.allocations[i].time_ticks >= r.allocations[i - 1].time_ticks);
    CHECK(r.allocations[i].sequence_number == r.allocations[i - 1].sequence_number + 1);
  }
  CHECK(r.chunk_writes.size() == sim.fs().chunk_writes());
}

TEST_CASE("purge after every secret deletion gives zero latency") {
  const auto p = load_profile(kTinyProfile);
  auto c = tiny_config(4, 9);
  c.mechanism = Mechanism::Purge;
  c.purge.after_secret_delete = true;
  const auto r = run_simulation(p, c);
  std::size_t resolved = 0;
  for (const auto& s : r.secrets) {
    if (!s.t_deleted) continue;
    REQUIRE(s.t_erased.has_value());
    CHECK(*s.t_erased == *s.t_deleted);
    CHECK_FALSE(s.censored);
    ++resolved;
  }
  CHECK(resolved > 3);
  CHECK(r.purges.size() >= resolved);
}

TEST_CASE("zero-overwrite resolves secrets at deletion") {
  const auto p = load_profile(kTinyProfile);
  auto c = tiny_config(4, 10);
  c.mechanism = Mechanism::ZeroOverwrite;
  const auto r = run_simulation(p, c);
  for (const auto& s : r.secrets) {
    if (!s.t_deleted) continue;
    REQUIRE(s.t_erased.has_value());
    CHECK(*s.t_erased == *s.t_deleted);
  }
}

TEST_CASE("ballooning shortens latency on the same workload") {
  const auto p = load_profile(kTinyProfile);
  auto base = tiny_config(24, 12);
  auto ball = base;
  ball.mechanism = Mechanism::Ballooning;
  ball.ballooning = secdel::BallooningConfig::for_target(6, 1, 16, 0.0);
  auto median = [](const RunResult& r) {
    std::vector<double> v;
    for (const auto& s : r.secrets)
      if (s.t_erased && s.t_deleted && !s.censored) v.push_back(static_cast<double>(*s.t_erased - *s.t_deleted));
    REQUIRE_FALSE(v.empty());
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
  };
  const auto rb = run_simulation(p, base);
  const auto rl = run_simulation(p, ball);
  CHECK(median(rl) < median(rb));
  CHECK(rl.allocations.size() > rb.allocations.size());
}

TEST_CASE("simulation config validation") {
  auto c = tiny_config();
  c.probe.pattern_bytes = 4;
  CHECK_ERRC(c.validate(), Errc::InvalidConfig);
  c = tiny_config();
  c.warmup_ticks = c.duration_ticks + 1;
  CHECK_ERRC(c.validate(), Errc::InvalidConfig);
  c = tiny_config();
  c.probe.pattern_bytes = 257;
  CHECK_ERRC(c.validate(), Errc::InvalidConfig);
}
