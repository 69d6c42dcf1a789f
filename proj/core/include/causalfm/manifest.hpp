#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace causalfm {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kManifestFile = "manifest.json";

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::uint64_t digest);
std::string file_digest(const std::string& path);

std::string read_file(const std::string& path);
// Writes to `<path>.tmp.<pid>` and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

struct FileDigest {
  std::string path;  // relative to the manifest directory
  std::string digest;
  std::string role;  // "input" or "output"
};

struct RunManifest {
  std::string command;
  std::string config;  // resolved key-value text
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
  std::vector<FileDigest> files;
  double wall_seconds = 0.0;

  // Records the digest of `path` (absolute or relative to `dir`).
  void add_file(const std::string& dir, const std::string& relative_path, std::string role);
  std::string to_json() const;
  static RunManifest from_json(std::string_view text);
  void write(const std::string& dir) const;
  static RunManifest load(const std::string& dir);
};

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> problems;
};

// Recomputes every recorded digest under `dir`.
ManifestCheck check_manifest(const std::string& dir);

}  // namespace causalfm
