// manifest.hpp - ordered key = value records written next to every artifact
#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dvm {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, long value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  void merge(const Manifest& other, const std::string& prefix = "") {
    for (const auto& [k, v] : other.entries_) set(prefix + k, v);
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace dvm
