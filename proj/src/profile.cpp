#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sdlab/error.hpp"
#include "sdlab/workload.hpp"

namespace sdlab::workload {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  for (;;) {
    const auto pos = s.find(sep);
    parts.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return parts;
}

double parse_number(std::string_view text, std::string_view context) {
  text = trim(text);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty() || !std::isfinite(v))
    throw Error(Errc::ParseError, "bad number '" + std::string(text) + "' in " + std::string(context));
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Distribution::Distribution(Variant v) : v_(std::move(v)) {}

Distribution Distribution::parse(std::string_view text) {
  const std::string_view s = trim(text);
  if (s == "never") return Distribution(Never{});
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')')
    throw Error(Errc::ParseError, "malformed distribution '" + std::string(s) + "'");
  const std::string_view kind = trim(s.substr(0, open));
  const std::string_view body = s.substr(open + 1, s.size() - open - 2);
  const auto args = split(body, ',');
  auto nonneg = [&](double v) {
    if (v < 0.0) throw Error(Errc::ParseError, "negative parameter in '" + std::string(s) + "'");
    return v;
  };
  auto expect_args = [&](std::size_t n) {
    if (args.size() != n) throw Error(Errc::ParseError, "wrong argument count in '" + std::string(s) + "'");
  };

  if (kind == "constant") {
    expect_args(1);
    return Distribution(Constant{nonneg(parse_number(args[0], s))});
  }
  if (kind == "uniform") {
    expect_args(2);
    const double lo = nonneg(parse_number(args[0], s));
    const double hi = nonneg(parse_number(args[1], s));
    if (lo > hi) throw Error(Errc::ParseError, "uniform bounds reversed in '" + std::string(s) + "'");
    return Distribution(Uniform{lo, hi});
  }
  if (kind == "exponential") {
    expect_args(1);
    const double mean = parse_number(args[0], s);
    if (mean <= 0.0) throw Error(Errc::ParseError, "exponential mean must be positive in '" + std::string(s) + "'");
    return Distribution(Exponential{mean});
  }
  if (kind == "empirical") {
    Empirical e;
    for (auto arg : args) {
      const auto kv = split(arg, ':');
      if (kv.size() != 2) throw Error(Errc::ParseError, "empirical point must be value:weight in '" + std::string(s) + "'");
      const double value = nonneg(parse_number(kv[0], s));
      const double weight = parse_number(kv[1], s);
      if (weight <= 0.0) throw Error(Errc::ParseError, "empirical weight must be positive in '" + std::string(s) + "'");
      e.points.emplace_back(value, weight);
    }
    return Distribution(std::move(e));
  }
  throw Error(Errc::UnknownDistribution, std::string(kind));
}

std::string Distribution::to_string() const {
  struct Visitor {
    std::string operator()(const Constant& c) const { return "constant(" + format_number(c.value) + ")"; }
    std::string operator()(const Uniform& u) const {
      return "uniform(" + format_number(u.low) + ", " + format_number(u.high) + ")";
    }
    std::string operator()(const Exponential& e) const { return "exponential(" + format_number(e.mean) + ")"; }
    std::string operator()(const Empirical& e) const {
      std::string out = "empirical(";
      for (std::size_t i = 0; i < e.points.size(); ++i) {
        if (i) out += ", ";
        out += format_number(e.points[i].first) + ":" + format_number(e.points[i].second);
      }
      return out + ")";
    }
    std::string operator()(const Never&) const { return "never"; }
  };
  return std::visit(Visitor{}, v_);
}

double Distribution::sample(std::mt19937_64& rng) const {
  struct Visitor {
    std::mt19937_64& rng;
    double operator()(const Constant& c) const { return c.value; }
    double operator()(const Uniform& u) const {
      if (u.low == u.high) return u.low;
      return std::uniform_real_distribution<double>(u.low, u.high)(rng);
    }
    double operator()(const Exponential& e) const { return std::exponential_distribution<double>(1.0 / e.mean)(rng); }
    double operator()(const Empirical& e) const {
      std::vector<double> weights;
      weights.reserve(e.points.size());
      for (const auto& p : e.points) weights.push_back(p.second);
      std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
      return e.points[pick(rng)].first;
    }
    double operator()(const Never&) const { return std::numeric_limits<double>::infinity(); }
  };
  return std::visit(Visitor{rng}, v_);
}

bool Distribution::strictly_positive() const {
  struct Visitor {
    bool operator()(const Constant& c) const { return c.value > 0.0; }
    bool operator()(const Uniform& u) const { return u.low > 0.0; }
    bool operator()(const Exponential&) const { return true; }
    bool operator()(const Empirical& e) const {
      return std::all_of(e.points.begin(), e.points.end(), [](const auto& p) { return p.first > 0.0; });
    }
    bool operator()(const Never&) const { return true; }
  };
  return std::visit(Visitor{}, v_);
}

void WorkloadProfile::validate() const {
  if (writers.empty()) throw Error(Errc::ParseError, "profile declares no writers");
  std::vector<WriterId> ids;
  for (const auto& w : writers) {
    if (w.id == 0 || w.id >= 0xF0) throw Error(Errc::ParseError, "writer '" + w.name + "' id must be in 1..239");
    ids.push_back(w.id);
    if (w.inter_creation_time_dist.is_never() || !w.inter_creation_time_dist.strictly_positive())
      throw Error(Errc::ParseError, "writer '" + w.name + "' inter_creation_time_dist must be strictly positive");
    if (w.file_type_dist.empty()) throw Error(Errc::ParseError, "writer '" + w.name + "' has no file types");
    double total = 0.0;
    for (const auto& [type, p] : w.file_type_dist) {
      if (!file_types.contains(type)) throw Error(Errc::ParseError, "writer '" + w.name + "' uses unknown file type '" + type + "'");
      if (p < 0.0) throw Error(Errc::ParseError, "negative probability in writer '" + w.name + "'");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw Error(Errc::ParseError, "file_type_dist of writer '" + w.name + "' does not sum to 1");
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw Error(Errc::ParseError, "duplicate writer id");
  for (const auto& [name, t] : file_types) {
    for (const Distribution* d : {&t.open_period_dist, &t.chunks_per_open_dist, &t.write_location_dist}) {
      if (d->is_never()) throw Error(Errc::ParseError, "file type '" + name + "': only lifetime_dist may be never");
    }
    if (!t.open_period_dist.strictly_positive() || !t.lifetime_dist.strictly_positive())
      throw Error(Errc::ParseError, "file type '" + name + "' times must be strictly positive");
  }
}

WorkloadProfile load_profile(std::string_view document) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(document)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ParseError, e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  auto required = [](const pt::ptree& section, const std::string& section_name, const char* key) {
    auto v = section.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) throw Error(Errc::ParseError, "[" + section_name + "] missing '" + key + "'");
    return *v;
  };
  auto reject_unknown = [](const pt::ptree& section, const std::string& section_name,
                           std::initializer_list<std::string_view> known) {
    for (const auto& [key, value] : section) {
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw Error(Errc::ParseError, "[" + section_name + "] unknown key '" + key + "'");
    }
  };

  WorkloadProfile profile;
  for (const auto& [section_name, section] : tree) {
    if (section_name == "profile") {
      reject_unknown(section, section_name, {"name", "description"});
      profile.name = section.get<std::string>("name", "");
      profile.description = section.get<std::string>("description", "");
    } else if (section_name.rfind("writer.", 0) == 0) {
      reject_unknown(section, section_name, {"id", "inter_creation_time_dist", "file_type_dist"});
      WriterSpec w;
      w.name = section_name.substr(7);
      const double id = parse_number(required(section, section_name, "id"), section_name);
      if (id != std::floor(id) || id < 0 || id > 255) throw Error(Errc::ParseError, "[" + section_name + "] bad id");
      w.id = static_cast<WriterId>(id);
      w.inter_creation_time_dist = Distribution::parse(required(section, section_name, "inter_creation_time_dist"));
      const std::string types = required(section, section_name, "file_type_dist");
      for (auto entry : split(types, ',')) {
        const auto kv = split(entry, ':');
        if (kv.size() != 2 || kv[0].empty())
          throw Error(Errc::ParseError, "[" + section_name + "] file_type_dist entries are type:probability");
        w.file_type_dist.emplace_back(std::string(kv[0]), parse_number(kv[1], section_name));
      }
      profile.writers.push_back(std::move(w));
    } else if (section_name.rfind("filetype.", 0) == 0) {
      reject_unknown(section, section_name,
                     {"lifetime_dist", "open_period_dist", "chunks_per_open_dist", "write_location_dist"});
      FileType t;
      t.name = section_name.substr(9);
      t.lifetime_dist = Distribution::parse(required(section, section_name, "lifetime_dist"));
      t.open_period_dist = Distribution::parse(required(section, section_name, "open_period_dist"));
      t.chunks_per_open_dist = Distribution::parse(required(section, section_name, "chunks_per_open_dist"));
      t.write_location_dist = Distribution::parse(required(section, section_name, "write_location_dist"));
      profile.file_types.emplace(t.name, std::move(t));
    } else {
      throw Error(Errc::ParseError, "unknown section [" + section_name + "]");
    }
  }
  std::sort(profile.writers.begin(), profile.writers.end(),
            [](const WriterSpec& a, const WriterSpec& b) { return a.name < b.name; });
  profile.validate();
  return profile;
}

WorkloadProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open profile " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_profile(buf.str());
}

std::string serialize_profile(const WorkloadProfile& profile) {
  std::ostringstream out;
  out << "[profile]\n";
  out << "name = " << profile.name << "\n";
  out << "description = " << profile.description << "\n";

  std::vector<const WriterSpec*> writers;
  for (const auto& w : profile.writers) writers.push_back(&w);
  std::sort(writers.begin(), writers.end(), [](const auto* a, const auto* b) { return a->name < b->name; });
  for (const auto* w : writers) {
    out << "\n[writer." << w->name << "]\n";
    out << "id = " << static_cast<unsigned>(w->id) << "\n";
    out << "inter_creation_time_dist = " << w->inter_creation_time_dist.to_string() << "\n";
    out << "file_type_dist = ";
    for (std::size_t i = 0; i < w->file_type_dist.size(); ++i) {
      if (i) out << ", ";
      out << w->file_type_dist[i].first << ":" << format_number(w->file_type_dist[i].second);
    }
    out << "\n";
  }
  for (const auto& [name, t] : profile.file_types) {
    out << "\n[filetype." << name << "]\n";
    out << "lifetime_dist = " << t.lifetime_dist.to_string() << "\n";
    out << "open_period_dist = " << t.open_period_dist.to_string() << "\n";
    out << "chunks_per_open_dist = " << t.chunks_per_open_dist.to_string() << "\n";
    out << "write_location_dist = " << t.write_location_dist.to_string() << "\n";
  }
  return out.str();
}

}  // namespace sdlab::workload
