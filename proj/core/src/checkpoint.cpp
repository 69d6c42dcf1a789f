#include "causalfm/checkpoint.hpp"

#include <cstdint>
#include <cstring>

#include "causalfm/error.hpp"
#include "causalfm/manifest.hpp"

namespace causalfm {

nlohmann::json to_json(const ArchConfig& a) {
  return {{"d_model", a.d_model}, {"n_layers", a.n_layers},       {"n_heads", a.n_heads},
          {"d_ff", a.d_ff},       {"n_classes", a.n_classes},     {"max_context", a.max_context},
          {"d_x_max", a.d_x_max}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  try {
    a.d_model = j.at("d_model").get<std::size_t>();
    a.n_layers = j.at("n_layers").get<std::size_t>();
    a.n_heads = j.at("n_heads").get<std::size_t>();
    a.d_ff = j.at("d_ff").get<std::size_t>();
    a.n_classes = j.at("n_classes").get<std::size_t>();
    a.max_context = j.at("max_context").get<std::size_t>();
    a.d_x_max = j.at("d_x_max").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint architecture: ") + e.what());
  }
  a.validate();
  return a;
}

std::string Checkpoint::serialize() const {
  if (params.size() != param_count(arch)) throw InputError("checkpoint parameter count does not match layout");
  if (bin_values.size() != arch.n_classes) throw InputError("checkpoint needs one bin value per class");
  nlohmann::json header = {{"format_version", kCheckpointFormatVersion},
                           {"arch", to_json(arch)},
                           {"metadata", metadata},
                           {"bin_values", bin_values},
                           {"thresholds", {thresholds.first, thresholds.second}},
                           {"param_count", params.size()}};
  std::string out = header.dump() + "\n";
  const std::size_t start = out.size();
  out.resize(start + 4 * params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float f = static_cast<float>(params[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int b = 0; b < 4; ++b) out[start + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw SchemaError("checkpoint has no header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format_version", -1) != kCheckpointFormatVersion) {
    throw SchemaError("unsupported checkpoint format_version");
  }
  Checkpoint c;
  c.arch = arch_from_json(header.at("arch"));
  c.metadata = header.value("metadata", nlohmann::json::object());
  c.bin_values = header.at("bin_values").get<std::vector<double>>();
  const auto t = header.at("thresholds").get<std::vector<double>>();
  if (t.size() != 2) throw SchemaError("checkpoint thresholds need two values");
  c.thresholds = {t[0], t[1]};
  const auto count = header.at("param_count").get<std::size_t>();
  if (count != param_count(c.arch)) {
    throw SchemaError("checkpoint param_count " + std::to_string(count) + " does not match the layout (" +
                      std::to_string(param_count(c.arch)) + ")");
  }
  if (bytes.size() - newline - 1 != 4 * count) throw SchemaError("checkpoint payload has the wrong length");
  if (c.bin_values.size() != c.arch.n_classes) throw SchemaError("checkpoint bin_values length mismatch");
  c.params.resize(count);
  const std::size_t start = newline + 1;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[start + 4 * i + b])) << (8 * b);
    }
    float f;
    std::memcpy(&f, &bits, 4);
    c.params[i] = f;
  }
  return c;
}

void Checkpoint::save(const std::string& path) const { write_file_atomic(path, serialize()); }

Checkpoint Checkpoint::load(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace causalfm
