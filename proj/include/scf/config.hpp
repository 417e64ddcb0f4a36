#pragma once

// Flat "key = value" configuration files. Lines starting with '#' are comments.
// Ranges are written "lo..hi"; a single number means lo == hi.

#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <string>

namespace scf {

template <typename T>
struct Range {
  T lo{};
  T hi{};

  bool empty() const { return hi < lo; }
  bool contains(T v) const { return v >= lo && v <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

std::string format_range(const Range<int>& r);
std::string format_range(const Range<double>& r);
std::string format_double(double v);

/// Key/value store that remembers which keys were consumed so leftovers can be rejected.
class KeyValues {
 public:
  KeyValues() = default;

  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  Range<int> get_int_range(const std::string& key, Range<int> fallback);
  Range<double> get_double_range(const std::string& key, Range<double> fallback);

  /// Throws ConfigError naming every key that was never read.
  void reject_unknown() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string* lookup(const std::string& key);

  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

}  // namespace scf
