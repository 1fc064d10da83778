#pragma once

// In-memory reference for file contents: byte strings keyed by object id.
// Holes read as zeros; no notion of chunks, blocks or collection.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

class ShadowFs {
 public:
  void create(std::uint32_t id) { files_[id]; }
  void remove(std::uint32_t id) { files_.erase(id); }
  bool exists(std::uint32_t id) const { return files_.contains(id); }

  void write(std::uint32_t id, std::uint64_t offset, const std::vector<std::uint8_t>& data) {
    auto& f = files_.at(id);
    if (f.size() < offset + data.size()) f.resize(offset + data.size(), 0);
    std::copy(data.begin(), data.end(), f.begin() + static_cast<std::ptrdiff_t>(offset));
  }

  void truncate(std::uint32_t id, std::uint64_t size) { files_.at(id).resize(size); }

  const std::vector<std::uint8_t>& contents(std::uint32_t id) const { return files_.at(id); }
  const std::map<std::uint32_t, std::vector<std::uint8_t>>& all() const { return files_; }

 private:
  std::map<std::uint32_t, std::vector<std::uint8_t>> files_;
};

}  // namespace oracle
