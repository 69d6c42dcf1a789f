#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalfm/model.hpp"

namespace causalfm {

inline constexpr int kCheckpointFormatVersion = 1;

// On disk: one JSON header line {format_version, arch, metadata, bin_values,
// thresholds, param_count}, then param_count little-endian float32 values in
// the documented parameter layout.
struct Checkpoint {
  ArchConfig arch;
  std::vector<double> params;
  std::vector<double> bin_values;
  std::pair<double, double> thresholds{-0.1, 0.1};
  nlohmann::json metadata = nlohmann::json::object();

  PfnModel model() const { return PfnModel(arch, params); }

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

nlohmann::json to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j);

}  // namespace causalfm
