#include "sdlab/report.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "sdlab/error.hpp"
#include "sdlab/metrics.hpp"

namespace sdlab::report {

namespace {

constexpr std::string_view kAllocHeader = "time_ticks,physical_block,sequence_number,free_chunks,erased_blocks,partition";
constexpr std::string_view kChunkHeader = "time_ticks,block,chunk,writer_id,kind,object_id,chunk_offset";
constexpr std::string_view kSecretHeader = "secret_id,t_written,t_deleted,t_erased,censored";
constexpr std::string_view kManifestHeader =
    "config_label,free_blocks_target,mechanism,repetition,seed,duration_ticks,warmup_ticks,block_count,erasure_limit,"
    "run_path,baseline";
constexpr std::string_view kReportHeader =
    "config_label,free_blocks_target,p01,p50,p90,p95,p100,allocs_per_hour,ratio,lifetime_years,ci_half_width";
constexpr std::string_view kNA = "NA";

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Reads the header and every data row, checking the column count.
std::vector<std::vector<std::string>> read_rows(std::istream& in, std::string_view header, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, std::string(what) + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error(Errc::ParseError, std::string(what) + ": unexpected header '" + line + "'");
  const std::size_t columns = split_row(std::string(header)).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_row(line);
    if (fields.size() != columns)
      throw Error(Errc::ParseError, std::string(what) + " line " + std::to_string(n) + ": expected " +
                                        std::to_string(columns) + " fields");
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw Error(Errc::ParseError, "expected an unsigned integer, got '" + s + "'");
  return v;
}

std::optional<std::uint64_t> to_opt_u64(const std::string& s) {
  if (s == kNA) return std::nullopt;
  return to_u64(s);
}

std::string opt_u64(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(kNA); }

std::string fixed(const std::optional<double>& v) {
  if (!v) return std::string(kNA);
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *v, std::chars_format::fixed, 4);
  return std::string(buf, ptr);
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::Io, "missing " + p.string());
  return in;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void write_allocations_csv(std::ostream& out, std::span<const metrics::AllocationRecord> records) {
  out << kAllocHeader << '\n';
  for (const auto& r : records)
    out << r.time_ticks << ',' << r.physical_block << ',' << r.sequence_number << ',' << r.free_chunks << ','
        << r.erased_blocks << ',' << r.partition_label << '\n';
}

std::vector<metrics::AllocationRecord> read_allocations_csv(std::istream& in) {
  std::vector<metrics::AllocationRecord> out;
  for (const auto& f : read_rows(in, kAllocHeader, "allocations.csv")) {
    metrics::AllocationRecord r;
    r.time_ticks = to_u64(f[0]);
    r.physical_block = static_cast<nand::BlockIndex>(to_u64(f[1]));
    r.sequence_number = to_u64(f[2]);
    r.free_chunks = to_u64(f[3]);
    r.erased_blocks = to_u64(f[4]);
    r.partition_label = f[5];
    out.push_back(std::move(r));
  }
  return out;
}

void write_chunk_writes_csv(std::ostream& out, std::span<const metrics::ChunkWriteRecord> records) {
  out << kChunkHeader << '\n';
  for (const auto& r : records)
    out << r.time_ticks << ',' << r.block << ',' << r.chunk << ',' << unsigned{r.writer_id} << ','
        << chunk_kind_name(r.kind) << ',' << r.object_id << ',' << r.chunk_offset << '\n';
}

void write_secrets_csv(std::ostream& out, std::span<const metrics::SecretRecord> records) {
  out << kSecretHeader << '\n';
  for (const auto& r : records) {
    out << r.secret_id << ',' << r.t_written << ',' << opt_u64(r.t_deleted) << ',' << opt_u64(r.t_erased) << ','
        << (r.censored ? 1 : 0) << '\n';
  }
}

std::vector<metrics::SecretRecord> read_secrets_csv(std::istream& in) {
  std::vector<metrics::SecretRecord> out;
  for (const auto& f : read_rows(in, kSecretHeader, "secrets.csv")) {
    metrics::SecretRecord r;
    r.secret_id = static_cast<std::uint32_t>(to_u64(f[0]));
    r.t_written = to_u64(f[1]);
    r.t_deleted = to_opt_u64(f[2]);
    r.t_erased = to_opt_u64(f[3]);
    r.censored = to_u64(f[4]) != 0;
    out.push_back(std::move(r));
  }
  return out;
}

void write_manifest_csv(std::ostream& out, std::span<const ManifestRow> rows) {
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << r.config_label << ',' << opt_u64(r.free_blocks_target) << ',' << r.mechanism << ',' << r.repetition << ','
        << r.seed << ',' << r.duration_ticks << ',' << r.warmup_ticks << ',' << r.block_count << ','
        << r.erasure_limit << ',' << r.run_path << ',' << (r.baseline ? 1 : 0) << '\n';
  }
}

std::vector<ManifestRow> read_manifest_csv(std::istream& in) {
  std::vector<ManifestRow> out;
  for (const auto& f : read_rows(in, kManifestHeader, "manifest.csv")) {
    ManifestRow r;
    r.config_label = f[0];
    r.free_blocks_target = to_opt_u64(f[1]);
    r.mechanism = f[2];
    r.repetition = static_cast<std::uint32_t>(to_u64(f[3]));
    r.seed = to_u64(f[4]);
    r.duration_ticks = to_u64(f[5]);
    r.warmup_ticks = to_u64(f[6]);
    r.block_count = to_u64(f[7]);
    r.erasure_limit = to_u64(f[8]);
    r.run_path = f[9];
    r.baseline = to_u64(f[10]) != 0;
    out.push_back(std::move(r));
  }
  return out;
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << r.config_label << ',' << opt_u64(r.free_blocks_target);
    for (const auto& p : r.percentiles) out << ',' << fixed(p);
    out << ',' << fixed(r.allocs_per_hour) << ',' << fixed(r.ratio) << ',' << fixed(r.lifetime_years) << ','
        << fixed(r.ci_half_width) << '\n';
  }
}

std::vector<ReportRow> build_report(const std::filesystem::path& dir) {
  auto manifest_in = open_input(dir / "manifest.csv");
  const auto manifest = read_manifest_csv(manifest_in);

  struct Accum {
    ReportRow row;
    std::array<std::vector<double>, 5> percentiles;
    std::vector<double> rates;
    std::uint64_t block_count = 0;
    std::uint64_t erasure_limit = 0;
    bool baseline = false;
  };
  std::vector<Accum> groups;
  std::map<std::string, std::size_t> by_label;

  for (const auto& m : manifest) {
    auto [it, inserted] = by_label.try_emplace(m.config_label, groups.size());
    if (inserted) {
      Accum a;
      a.row.config_label = m.config_label;
      a.row.free_blocks_target = m.free_blocks_target;
      a.block_count = m.block_count;
      a.erasure_limit = m.erasure_limit;
      groups.push_back(std::move(a));
    }
    Accum& a = groups[it->second];
    a.baseline = a.baseline || m.baseline;

    const auto run = dir / m.run_path;
    auto secrets_in = open_input(run / "secrets.csv");
    const auto secrets = read_secrets_csv(secrets_in);
    auto alloc_in = open_input(run / "allocations.csv");
    const auto allocations = read_allocations_csv(alloc_in);

    if (!secrets.empty()) {
      const auto stats = metrics::deletion_latency(secrets);
      if (stats.percentiles)
        for (std::size_t i = 0; i < 5; ++i) a.percentiles[i].push_back((*stats.percentiles)[i]);
    }
    if (m.duration_ticks > m.warmup_ticks)
      a.rates.push_back(metrics::allocation_rate(allocations, {m.warmup_ticks, m.duration_ticks}));
  }

  std::optional<double> baseline_rate;
  for (auto& a : groups) {
    for (std::size_t i = 0; i < 5; ++i) a.row.percentiles[i] = mean_of(a.percentiles[i]);
    a.row.allocs_per_hour = mean_of(a.rates);
    if (a.row.allocs_per_hour && *a.row.allocs_per_hour > 0.0)
      a.row.lifetime_years = metrics::expected_lifetime(*a.row.allocs_per_hour, a.block_count, a.erasure_limit);
    if (a.percentiles[1].size() >= 2) a.row.ci_half_width = metrics::confidence_interval(a.percentiles[1]).half_width;
    if (a.baseline && !baseline_rate) baseline_rate = a.row.allocs_per_hour;
  }

  std::vector<ReportRow> rows;
  for (auto& a : groups) {
    if (baseline_rate && *baseline_rate > 0.0 && a.row.allocs_per_hour)
      a.row.ratio = *a.row.allocs_per_hour / *baseline_rate;
    rows.push_back(std::move(a.row));
  }
  return rows;
}

std::vector<ReportRow> regenerate_report(const std::filesystem::path& dir) {
  auto rows = build_report(dir);
  std::ofstream out(dir / "report.csv", std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + (dir / "report.csv").string());
  write_report_csv(out, rows);
  return rows;
}

}  // namespace sdlab::report
