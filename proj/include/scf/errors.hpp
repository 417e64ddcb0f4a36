#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace scf {

/// Invalid configuration value, unknown key, or impossible parameter range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure; always carries the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Malformed file contents (raster or weight files).
class FormatError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, malformed_header, truncated, version_mismatch, unsupported };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace scf
