#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causalfm {

// Flat `key = value` configuration text. Blank lines and `#` comments are
// ignored; a later assignment of the same key overrides an earlier one.
// Ranges are written `lo, hi`; lists are comma separated.
class KvConfig {
 public:
  KvConfig() = default;
  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::string& path);

  bool has(std::string_view key) const { return values_.count(std::string(key)) > 0; }
  void set(std::string key, std::string value);

  // Typed accessors throw ConfigError naming the key on a missing key or a
  // malformed value. Every accessed key is marked as used.
  std::string get_string(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::pair<double, double> get_range(std::string_view key) const;
  std::pair<std::int64_t, std::int64_t> get_int_range(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<std::string> get_strings(std::string_view key) const;

  std::string string_or(std::string_view key, std::string fallback) const;
  double double_or(std::string_view key, double fallback) const;
  std::int64_t int_or(std::string_view key, std::int64_t fallback) const;

  // Throws ConfigError naming the first key that was never read.
  void reject_unused() const;

  // Canonical `key = value` text, sorted by key.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const std::string& raw(std::string_view key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace causalfm
