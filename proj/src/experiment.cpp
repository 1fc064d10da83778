#include "sdlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sdlab/error.hpp"

namespace sdlab::experiment {

namespace pt = boost::property_tree;

namespace {

class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : tree_)
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw Error(Errc::InvalidConfig, "[" + name_ + "] unknown key '" + key + "'");
  }

  std::optional<std::string> raw(const char* key) const {
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  std::string text(const char* key, std::string fallback) const { return raw(key).value_or(std::move(fallback)); }

  double number(const char* key, double fallback) const {
    const auto v = raw(key);
    return v ? parse_double(*v, key) : fallback;
  }

  std::uint64_t integer(const char* key, std::uint64_t fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty()) fail(key, *v);
    return out;
  }

  bool flag(const char* key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    fail(key, *v);
  }

  std::vector<double> numbers(const char* key) const {
    std::vector<double> out;
    const auto v = raw(key);
    if (!v || v->empty()) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      out.push_back(parse_double(b == std::string::npos ? "" : item.substr(b, e - b + 1), key));
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const char* key, const std::string& v) const {
    throw Error(Errc::InvalidConfig, "[" + name_ + "] bad value for '" + key + "': '" + v + "'");
  }

  double parse_double(const std::string& v, const char* key) const {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out) || out < 0.0)
      fail(key, v);
    return out;
  }

  const pt::ptree& tree_;
  std::string name_;
};

const pt::ptree kEmpty;

Ticks hours_to_ticks(double hours) { return static_cast<Ticks>(std::llround(hours * kTicksPerHour)); }

bool bare_label(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace

void RunConfig::validate() const {
  if (repetitions < 1) throw Error(Errc::InvalidConfig, "repetitions must be >= 1");
  if (points.empty()) throw Error(Errc::InvalidConfig, "no configurations");
  for (const auto& p : points) {
    if (!bare_label(p.label)) throw Error(Errc::InvalidConfig, "config label '" + p.label + "' must be [A-Za-z0-9._-]+");
    p.sim.validate();
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i].label == points[j].label) throw Error(Errc::InvalidConfig, "duplicate label " + points[i].label);
  profile.validate();
}

RunConfig parse_run_config(std::string_view document, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(document)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ParseError, e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return Section(child ? *child : kEmpty, name);
  };

  RunConfig cfg;
  const Section run = section("run");
  run.allow({"profile", "duration_hours", "warmup_hours", "repetitions", "seed", "threads", "record_chunk_writes",
             "out_dir"});
  const auto profile = run.raw("profile");
  if (!profile) throw Error(Errc::InvalidConfig, "[run] missing 'profile'");
  cfg.profile_path = std::filesystem::path(*profile);
  if (cfg.profile_path.is_relative()) cfg.profile_path = base_dir / cfg.profile_path;
  cfg.profile = workload::load_profile_file(cfg.profile_path.string());
  cfg.repetitions = static_cast<std::uint32_t>(run.integer("repetitions", 1));
  cfg.seed = run.integer("seed", 1);
  cfg.threads = static_cast<unsigned>(run.integer("threads", 0));
  cfg.out_dir = run.text("out_dir", "sdlab-out");

  workload::SimulationConfig base;
  base.duration_ticks = hours_to_ticks(run.number("duration_hours", 24.0));
  base.warmup_ticks = hours_to_ticks(run.number("warmup_hours", 0.0));
  base.record_chunk_writes = run.flag("record_chunk_writes", true);

  const Section geo = section("geometry");
  geo.allow({"chunk_size", "chunks_per_block", "block_count", "erasure_limit", "multiple_programming"});
  base.geometry.chunk_size_bytes = static_cast<std::uint32_t>(geo.integer("chunk_size", base.geometry.chunk_size_bytes));
  base.geometry.chunks_per_block =
      static_cast<std::uint32_t>(geo.integer("chunks_per_block", base.geometry.chunks_per_block));
  base.geometry.block_count = static_cast<std::uint32_t>(geo.integer("block_count", base.geometry.block_count));
  base.geometry.erasure_limit = geo.integer("erasure_limit", base.geometry.erasure_limit);
  base.geometry.multiple_programming_allowed =
      geo.flag("multiple_programming", base.geometry.multiple_programming_allowed);

  const Section fs = section("fs");
  fs.allow({"reserve_blocks", "passive_gc_copy_budget", "passive_gc_dirtiness_threshold"});
  base.fs.reserve_blocks = static_cast<std::uint32_t>(fs.integer("reserve_blocks", base.fs.reserve_blocks));
  base.fs.passive_gc_copy_budget =
      static_cast<std::uint32_t>(fs.integer("passive_gc_copy_budget", base.fs.passive_gc_copy_budget));
  base.fs.passive_gc_dirtiness_threshold =
      fs.number("passive_gc_dirtiness_threshold", base.fs.passive_gc_dirtiness_threshold);

  const Section probe = section("probe");
  probe.allow({"enabled", "period_seconds", "pattern_bytes"});
  base.probe.enabled = probe.flag("enabled", true);
  base.probe.period_ticks = probe.integer("period_seconds", base.probe.period_ticks);
  base.probe.pattern_bytes = probe.integer("pattern_bytes", base.probe.pattern_bytes);

  for (const auto& [name, child] : tree) {
    if (name == "run" || name == "geometry" || name == "fs" || name == "probe") continue;
    if (name.rfind("config.", 0) != 0) throw Error(Errc::InvalidConfig, "unknown section [" + name + "]");
    const Section s(child, name);
    s.allow({"mechanism", "baseline", "free_blocks_target", "upper_threshold_blocks", "lower_threshold_blocks",
             "junk_file_blocks", "min_free_fraction", "balloon_period_seconds", "rotation_age_hours",
             "purge_at_hours", "purge_after_secret_delete", "purge_seconds_per_block", "duration_hours",
             "warmup_hours"});
    ExperimentPoint p;
    p.label = name.substr(7);
    p.sim = base;
    p.sim.mechanism = workload::parse_mechanism(s.text("mechanism", "none"));
    if (s.raw("duration_hours")) p.sim.duration_ticks = hours_to_ticks(s.number("duration_hours", 0));
    if (s.raw("warmup_hours")) p.sim.warmup_ticks = hours_to_ticks(s.number("warmup_hours", 0));
    p.baseline = s.flag("baseline", false);
    const std::uint64_t cpb = base.geometry.chunks_per_block;
    if (p.sim.mechanism == workload::Mechanism::Ballooning) {
      const auto junk = static_cast<std::uint32_t>(s.integer("junk_file_blocks", 1));
      const double floor = s.number("min_free_fraction", 0.05);
      if (s.raw("free_blocks_target")) {
        p.free_blocks_target = s.integer("free_blocks_target", 0);
        p.sim.ballooning = secdel::BallooningConfig::for_target(*p.free_blocks_target, junk, cpb, floor);
      } else {
        p.sim.ballooning.junk_file_blocks = junk;
        p.sim.ballooning.min_free_fraction = floor;
        p.sim.ballooning.upper_threshold_chunks = s.integer("upper_threshold_blocks", 0) * cpb;
        p.sim.ballooning.lower_threshold_chunks = s.integer("lower_threshold_blocks", 0) * cpb;
      }
      if (s.raw("rotation_age_hours")) p.sim.ballooning.rotation_age_limit = hours_to_ticks(s.number("rotation_age_hours", 0));
      p.sim.balloon_period_ticks = s.integer("balloon_period_seconds", p.sim.balloon_period_ticks);
    }
    if (p.sim.mechanism == workload::Mechanism::Purge) {
      for (double h : s.numbers("purge_at_hours")) p.sim.purge.at_ticks.push_back(hours_to_ticks(h));
      p.sim.purge.after_secret_delete = s.flag("purge_after_secret_delete", false);
      p.sim.purge.ticks_per_block = s.integer("purge_seconds_per_block", 0);
    }
    cfg.points.push_back(std::move(p));
  }
  if (cfg.points.empty()) {
    ExperimentPoint p;
    p.label = "baseline";
    p.sim = base;
    p.baseline = true;
    cfg.points.push_back(std::move(p));
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

std::uint64_t repetition_seed(std::uint64_t seed, std::uint32_t repetition) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), repetition};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (std::uint64_t{words[0]} << 32) | words[1];
}

void write_run(const workload::RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("allocations.csv");
    report::write_allocations_csv(out, result.allocations);
  }
  {
    auto out = open("chunk_writes.csv");
    report::write_chunk_writes_csv(out, result.chunk_writes);
  }
  {
    auto out = open("secrets.csv");
    report::write_secrets_csv(out, result.secrets);
  }
}

std::vector<report::ReportRow> run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                                              const std::function<void(const std::string&)>& progress) {
  config.validate();
  std::filesystem::create_directories(out_dir);

  struct Job {
    const ExperimentPoint* point;
    std::uint32_t repetition;
    std::string run_path;
  };
  std::vector<Job> jobs;
  std::vector<report::ManifestRow> manifest;
  for (const auto& p : config.points) {
    for (std::uint32_t r = 0; r < config.repetitions; ++r) {
      Job job{&p, r, p.label + "/rep-" + std::to_string(r)};
      report::ManifestRow row;
      row.config_label = p.label;
      row.free_blocks_target = p.free_blocks_target;
      row.mechanism = std::string(workload::mechanism_name(p.sim.mechanism));
      row.repetition = r;
      row.seed = repetition_seed(config.seed, r);
      row.duration_ticks = p.sim.duration_ticks;
      row.warmup_ticks = p.sim.warmup_ticks;
      row.block_count = p.sim.geometry.block_count;
      row.erasure_limit = p.sim.geometry.erasure_limit;
      row.run_path = job.run_path;
      row.baseline = p.baseline;
      manifest.push_back(std::move(row));
      jobs.push_back(std::move(job));
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= jobs.size()) return;
      try {
        workload::SimulationConfig sim = jobs[i].point->sim;
        sim.seed = manifest[i].seed;
        const auto result = workload::run_simulation(config.profile, sim);
        write_run(result, out_dir / jobs[i].run_path);
        if (progress) {
          std::lock_guard lock(mu);
          progress(jobs[i].run_path + ": " + std::to_string(result.allocations.size()) + " allocations, " +
                   std::to_string(result.secrets.size()) + " secrets");
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  unsigned n = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  {
    std::ofstream out(out_dir / "manifest.csv", std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write manifest.csv");
    report::write_manifest_csv(out, manifest);
  }
  return report::regenerate_report(out_dir);
}

}  // namespace sdlab::experiment
