#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdlab/report.hpp"
#include "sdlab/simulation.hpp"
#include "sdlab/workload.hpp"

namespace sdlab::experiment {

// One column of the experimental matrix.
struct ExperimentPoint {
  std::string label;
  workload::SimulationConfig sim;  // seed is filled per repetition
  std::optional<std::uint64_t> free_blocks_target;
  bool baseline = false;
};

struct RunConfig {
  std::filesystem::path profile_path;
  workload::WorkloadProfile profile;
  std::vector<ExperimentPoint> points;
  std::uint32_t repetitions = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "sdlab-out";
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Relative profile paths resolve against `base_dir`.
RunConfig parse_run_config(std::string_view document, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

std::uint64_t repetition_seed(std::uint64_t seed, std::uint32_t repetition);

// Writes one directory per run, manifest.csv and report.csv under `out_dir`.
std::vector<report::ReportRow> run_experiment(const RunConfig& config, const std::filesystem::path& out_dir,
                                              const std::function<void(const std::string&)>& progress = {});

// Persists a single run's logs into `dir`.
void write_run(const workload::RunResult& result, const std::filesystem::path& dir);

}  // namespace sdlab::experiment
