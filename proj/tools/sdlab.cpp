#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdlab/error.hpp"
#include "sdlab/experiment.hpp"
#include "sdlab/lsfs.hpp"
#include "sdlab/nand_medium.hpp"
#include "sdlab/report.hpp"
#include "sdlab/secdel.hpp"

namespace {

using namespace sdlab;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

std::optional<nand::Bytes> parse_hex(const std::string& text) {
  if (text.size() % 2) return std::nullopt;
  nand::Bytes out;
  for (std::size_t i = 0; i < text.size(); i += 2) {
    unsigned v = 0;
    if (std::sscanf(text.c_str() + i, "%2x", &v) != 1) return std::nullopt;
    out.push_back(static_cast<nand::Byte>(v));
  }
  return out;
}

int cmd_simulate(const Globals& g, const std::string& config_path, unsigned threads) {
  auto config = experiment::load_run_config(config_path);
  if (g.seed) config.seed = *g.seed;
  if (threads) config.threads = threads;
  const std::filesystem::path out = g.out_dir.empty() ? config.out_dir : std::filesystem::path(g.out_dir);
  auto progress = [&](const std::string& line) {
    if (!g.quiet) std::cerr << "  " << line << '\n';
  };
  const auto rows = experiment::run_experiment(config, out, progress);
  if (!g.quiet) {
    report::write_report_csv(std::cout, rows);
    std::cerr << "wrote " << (out / "report.csv").string() << '\n';
  }
  return 0;
}

int cmd_report(const Globals& g, const std::string& dir) {
  const auto rows = report::regenerate_report(dir);
  if (!g.quiet) report::write_report_csv(std::cout, rows);
  return 0;
}

int cmd_scan(const Globals& g, const std::string& image, const std::string& pattern, bool hex) {
  nand::Bytes needle(pattern.begin(), pattern.end());
  if (hex) {
    auto parsed = parse_hex(pattern);
    if (!parsed) {
      std::cerr << "scan: pattern is not valid hex\n";
      return 2;
    }
    needle = std::move(*parsed);
  }
  std::optional<nand::Medium> medium;
  try {
    medium.emplace(nand::Medium::load_file(image));
  } catch (const Error& e) {
    std::cerr << "scan: " << e.what() << '\n';
    return 2;
  }
  const auto hits = medium->raw_scan(needle);
  for (const auto& h : hits) std::cout << h.block << ' ' << h.chunk << ' ' << h.offset << '\n';
  if (!g.quiet) std::cerr << hits.size() << " hit(s)\n";
  return hits.empty() ? 1 : 0;
}

struct DemoOptions {
  std::string secret;
  bool zero_overwrite = false;
  std::string image;
  nand::MediumGeometry geometry{2048, 64, 64, 10000, true};
  std::uint32_t reserve_blocks = 5;
};

int cmd_purge_demo(const Globals& g, const DemoOptions& o) {
  if (o.secret.empty() || o.secret.size() > o.geometry.chunk_size_bytes) {
    std::cerr << "purge-demo: secret must be 1.." << o.geometry.chunk_size_bytes << " bytes\n";
    return 2;
  }
  fs::FsConfig fc;
  fc.reserve_blocks = o.reserve_blocks;
  fs::FileSystem fsys(o.geometry, fc);
  if (o.zero_overwrite) secdel::set_zero_overwrite(fsys, true);
  const std::uint64_t seed = g.seed.value_or(1);

  // Some unrelated data around the secret, as on a used device.
  for (int i = 0; i < 4; ++i) {
    const ObjectId id = fsys.create_file("data-" + std::to_string(i), 1);
    fsys.write_file(id, 0, secdel::junk_payload(seed, id, 5 * std::uint64_t{o.geometry.chunk_size_bytes}));
  }

  int stage = 0;
  bool ok = true;
  auto snapshot = [&](const char* what, bool expect_found) {
    ++stage;
    const auto hits = fsys.medium().raw_scan(o.secret);
    if (!o.image.empty()) fsys.medium().save_file(o.image + "." + std::to_string(stage));
    const bool found = !hits.empty();
    if (found != expect_found) ok = false;
    if (!g.quiet) {
      std::cout << "snapshot " << stage << " (" << what << "): " << (found ? "found" : "not found");
      if (found) std::cout << " at block " << hits.front().block << " chunk " << hits.front().chunk;
      std::cout << (found == expect_found ? "" : "  [unexpected]") << '\n';
    }
    return found;
  };

  const ObjectId secret = fsys.create_file("secret", 2);
  fsys.write_file(secret, 0, std::span(reinterpret_cast<const nand::Byte*>(o.secret.data()), o.secret.size()));
  snapshot("written", true);
  fsys.delete_file(secret);
  snapshot("deleted", !o.zero_overwrite);
  const auto r = secdel::purge(fsys, {seed, 0});
  const bool final_found = snapshot("purged", false);
  if (!g.quiet)
    std::cout << "purge: " << r.blocks_erased << " block erasures, " << r.chunks_written << " chunks written\n";
  return ok && !final_found ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdlab: secure deletion laboratory for log-structured flash file systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Override the run seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress and tables");

  std::string config_path;
  unsigned threads = 0;
  auto* simulate = app.add_subcommand("simulate", "Run an experiment described by a config file");
  simulate->add_option("config", config_path, "Run config (INI)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--threads", threads, "Parallel runs (default: all cores)");

  DemoOptions demo;
  auto* purge_demo = app.add_subcommand("purge-demo", "Write, delete and purge a secret, scanning after each step");
  purge_demo->add_option("--secret", demo.secret, "Secret pattern")->required();
  purge_demo->add_flag("--zero-overwrite", demo.zero_overwrite, "Enable zero overwriting before deleting");
  purge_demo->add_option("--image", demo.image, "Write snapshot images to PATH.1, PATH.2, PATH.3");
  purge_demo->add_option("--chunk-size", demo.geometry.chunk_size_bytes, "Bytes per chunk");
  purge_demo->add_option("--chunks-per-block", demo.geometry.chunks_per_block, "Chunks per erase block");
  purge_demo->add_option("--block-count", demo.geometry.block_count, "Erase blocks");
  purge_demo->add_option("--reserve-blocks", demo.reserve_blocks, "Collector reserve");

  std::string image, pattern;
  bool hex = false;
  auto* scan = app.add_subcommand("scan", "Search a medium image for a byte pattern");
  scan->add_option("image", image, "Medium image")->required();
  scan->add_option("pattern", pattern, "Pattern")->required();
  scan->add_flag("--hex", hex, "Pattern is hex encoded");

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Rebuild report.csv from a simulate output directory");
  report->add_option("dir", run_dir, "Output directory of simulate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(g, config_path, threads);
    if (*purge_demo) return cmd_purge_demo(g, demo);
    if (*scan) return cmd_scan(g, image, pattern, hex);
    if (*report) return cmd_report(g, run_dir.empty() ? g.out_dir : run_dir);
  } catch (const Error& e) {
    std::cerr << "sdlab: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sdlab: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
