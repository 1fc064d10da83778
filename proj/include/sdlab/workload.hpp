#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sdlab/records.hpp"

namespace sdlab::workload {

// A distribution over non-negative reals, written in profiles as
// constant(v), uniform(a,b), exponential(mean), empirical(v:w, ...) or never.
class Distribution {
 public:
  struct Constant {
    double value;
  };
  struct Uniform {
    double low, high;
  };
  struct Exponential {
    double mean;
  };
  struct Empirical {
    std::vector<std::pair<double, double>> points;  // (value, weight)
  };
  struct Never {};
  using Variant = std::variant<Constant, Uniform, Exponential, Empirical, Never>;

  Distribution() : v_(Constant{1.0}) {}
  explicit Distribution(Variant v);

  static Distribution parse(std::string_view text);
  std::string to_string() const;

  double sample(std::mt19937_64& rng) const;
  bool is_never() const { return std::holds_alternative<Never>(v_); }
  // True when every sample is > 0.
  bool strictly_positive() const;
  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

struct FileType {
  std::string name;
  Distribution lifetime_dist;         // seconds from creation to deletion; never = permanent
  Distribution open_period_dist;      // seconds between opens for write
  Distribution chunks_per_open_dist;  // chunks written per open
  Distribution write_location_dist;   // fraction of the file where a write starts; >= 1 appends
};

struct WriterSpec {
  std::string name;
  WriterId id = 0;
  Distribution inter_creation_time_dist;                      // seconds between new files
  std::vector<std::pair<std::string, double>> file_type_dist;  // (file type, probability)
};

struct WorkloadProfile {
  std::string name;
  std::string description;
  std::vector<WriterSpec> writers;
  std::map<std::string, FileType> file_types;

  void validate() const;
};

WorkloadProfile load_profile(std::string_view document);
WorkloadProfile load_profile_file(const std::string& path);
// Canonical form: fixed section order and key order, shortest round-trip numbers.
std::string serialize_profile(const WorkloadProfile& profile);

}  // namespace sdlab::workload
