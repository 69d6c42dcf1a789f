#include "causalfm/manifest.hpp"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causalfm/error.hpp"

namespace causalfm {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << digest;
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string file_digest(const std::string& path) { return digest_hex(fnv1a64(read_file(path))); }

void write_file_atomic(const std::string& path, std::string_view contents) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw IoError("short write to '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot rename into '" + path + "': " + ec.message());
  }
}

void RunManifest::add_file(const std::string& dir, const std::string& relative_path,
                           std::string role) {
  const fs::path full = fs::path(relative_path).is_absolute() ? fs::path(relative_path)
                                                               : fs::path(dir) / relative_path;
  files.push_back({relative_path, file_digest(full.string()), std::move(role)});
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["wall_seconds"] = wall_seconds;
  j["files"] = nlohmann::json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"path", f.path}, {"digest", f.digest}, {"role", f.role}});
  }
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("digest").get<std::string>(),
                         f.at("role").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void RunManifest::write(const std::string& dir) const {
  write_file_atomic((fs::path(dir) / kManifestFile).string(), to_json());
}

RunManifest RunManifest::load(const std::string& dir) {
  return from_json(read_file((fs::path(dir) / kManifestFile).string()));
}

ManifestCheck check_manifest(const std::string& dir) {
  ManifestCheck result;
  const RunManifest manifest = RunManifest::load(dir);
  for (const auto& f : manifest.files) {
    const fs::path full =
        fs::path(f.path).is_absolute() ? fs::path(f.path) : fs::path(dir) / f.path;
    if (!fs::exists(full)) {
      result.ok = false;
      result.problems.push_back("missing: " + f.path);
      continue;
    }
    const std::string digest = file_digest(full.string());
    if (digest != f.digest) {
      result.ok = false;
      result.problems.push_back("digest mismatch: " + f.path + " (recorded " + f.digest +
                                ", found " + digest + ")");
    }
  }
  return result;
}

}  // namespace causalfm
