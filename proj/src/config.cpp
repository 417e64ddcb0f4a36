#include "scf/config.hpp"

#include "scf/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace scf {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

template <typename T>
Range<T> parse_range(const std::string& text, const std::string& key) {
  const auto dots = text.find("..");
  Range<T> r;
  if (dots == std::string::npos) {
    r.lo = r.hi = parse_number<T>(trim(text), key);
  } else {
    r.lo = parse_number<T>(trim(text.substr(0, dots)), key);
    r.hi = parse_number<T>(trim(text.substr(dots + 2)), key);
  }
  if (r.empty()) throw ConfigError("config key '" + key + "': empty range '" + text + "'");
  return r;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_range(const Range<int>& r) { return std::to_string(r.lo) + ".." + std::to_string(r.hi); }
std::string format_range(const Range<double>& r) { return format_double(r.lo) + ".." + format_double(r.hi); }

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.values_.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const std::string* KeyValues::lookup(const std::string& key) {
  used_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) {
  const auto* v = lookup(key);
  return v ? *v : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) {
  const auto* v = lookup(key);
  return v ? parse_number<double>(*v, key) : fallback;
}

int KeyValues::get_int(const std::string& key, int fallback) {
  const auto* v = lookup(key);
  return v ? parse_number<int>(*v, key) : fallback;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) {
  const auto* v = lookup(key);
  return v ? parse_number<std::uint64_t>(*v, key) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) {
  const auto* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + *v + "'");
}

Range<int> KeyValues::get_int_range(const std::string& key, Range<int> fallback) {
  const auto* v = lookup(key);
  return v ? parse_range<int>(*v, key) : fallback;
}

Range<double> KeyValues::get_double_range(const std::string& key, Range<double> fallback) {
  const auto* v = lookup(key);
  return v ? parse_range<double>(*v, key) : fallback;
}

void KeyValues::reject_unknown() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError(origin_ + ": unknown config keys: " + unknown);
}

}  // namespace scf
