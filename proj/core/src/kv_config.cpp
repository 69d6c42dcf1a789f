#include "causalfm/kv_config.hpp"

#include <charconv>
#include <sstream>

#include "causalfm/error.hpp"
#include "causalfm/manifest.hpp"

namespace causalfm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class T>
T parse_number(const std::string& key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError(key, "config key '" + key + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

KvConfig KvConfig::parse(std::string_view text) {
  KvConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("", "config line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError("", "config line " + std::to_string(line_no) + ": empty key");
      config.values_[key] = std::string(trim(line.substr(eq + 1)));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return config;
}

KvConfig KvConfig::load(const std::string& path) { return parse(read_file(path)); }

void KvConfig::set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

const std::string& KvConfig::raw(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) {
    throw ConfigError(std::string(key), "missing required config key '" + std::string(key) + "'");
  }
  used_.insert(it->first);
  return it->second;
}

std::string KvConfig::get_string(std::string_view key) const { return raw(key); }

double KvConfig::get_double(std::string_view key) const {
  return parse_number<double>(std::string(key), raw(key));
}

std::int64_t KvConfig::get_int(std::string_view key) const {
  return parse_number<std::int64_t>(std::string(key), raw(key));
}

std::uint64_t KvConfig::get_uint(std::string_view key) const {
  return parse_number<std::uint64_t>(std::string(key), raw(key));
}

bool KvConfig::get_bool(std::string_view key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key), "config key '" + std::string(key) + "': expected a boolean");
}

std::pair<double, double> KvConfig::get_range(std::string_view key) const {
  const auto parts = get_doubles(key);
  if (parts.size() == 1) return {parts[0], parts[0]};
  if (parts.size() != 2 || parts[0] > parts[1]) {
    throw ConfigError(std::string(key), "config key '" + std::string(key) + "': expected 'lo, hi' with lo <= hi");
  }
  return {parts[0], parts[1]};
}

std::pair<std::int64_t, std::int64_t> KvConfig::get_int_range(std::string_view key) const {
  const std::string k(key);
  const auto parts = split(raw(key), ',');
  std::vector<std::int64_t> v;
  for (const auto& p : parts) v.push_back(parse_number<std::int64_t>(k, p));
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() != 2 || v[0] > v[1]) {
    throw ConfigError(k, "config key '" + k + "': expected 'lo, hi' with lo <= hi");
  }
  return {v[0], v[1]};
}

std::vector<double> KvConfig::get_doubles(std::string_view key) const {
  const std::string k(key);
  std::vector<double> out;
  for (const auto& p : split(raw(key), ',')) out.push_back(parse_number<double>(k, p));
  return out;
}

std::vector<std::string> KvConfig::get_strings(std::string_view key) const {
  return split(raw(key), ',');
}

std::string KvConfig::string_or(std::string_view key, std::string fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double KvConfig::double_or(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KvConfig::int_or(std::string_view key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

void KvConfig::reject_unused() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) throw ConfigError(key, "unknown config key '" + key + "'");
  }
}

std::string KvConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
  return out.str();
}

}  // namespace causalfm
