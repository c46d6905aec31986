#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace merr {

/// Flat `key = value` text with dotted section keys; `#` starts a comment.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real_or(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
  bool flag_or(const std::string& key, bool fallback) const;
  /// Comma-separated list; `lo..hi` expands to the doubling sequence lo, 2lo, ... <= hi.
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// FNV-1a over the sorted entries; insensitive to comments, spacing and order.
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

std::string hex64(std::uint64_t value);

}  // namespace merr
