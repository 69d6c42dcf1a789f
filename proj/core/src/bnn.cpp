#include "causalfm/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

constexpr int kMaxMaskRedraws = 100;

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(key, std::string("invalid prior config '") + key + "': " + what);
}

int draw_in(Rng& rng, std::pair<int, int> range) {
  return static_cast<int>(rng.uniform_int(range.first, range.second));
}

BnnFunction::Layer dense_layer(std::size_t in, std::size_t out, bool tanh, double scale, Rng& rng) {
  BnnFunction::Layer layer;
  layer.in = in;
  layer.out = out;
  layer.tanh = tanh;
  layer.weights.resize(in * out);
  layer.bias.resize(out);
  layer.mask.assign(in * out, 1);
  for (double& w : layer.weights) w = scale * rng.normal();
  for (double& b : layer.bias) b = scale * rng.normal();
  return layer;
}

void draw_masks(std::vector<BnnFunction::Layer>& layers, const std::vector<double>& dense_weights_flat,
                double drop, Rng& rng) {
  std::size_t offset = 0;
  for (auto& layer : layers) {
    for (std::size_t k = 0; k < layer.mask.size(); ++k) {
      layer.mask[k] = rng.uniform() >= drop ? 1 : 0;
      layer.weights[k] = layer.mask[k] ? dense_weights_flat[offset + k] : 0.0;
    }
    offset += layer.mask.size();
  }
}

std::shared_ptr<BnnFunction> sample_graph(const BnnPriorConfig& config, std::size_t n_in,
                                          std::size_t n_out, bool clustered, Rng& rng) {
  if (n_in == 0 || n_out == 0) throw PreconditionError("BNN needs n_in >= 1 and n_out >= 1");
  const int depth = draw_in(rng, config.hidden_layers);
  std::vector<std::size_t> widths;
  for (int l = 0; l < depth; ++l) widths.push_back(static_cast<std::size_t>(draw_in(rng, config.width)));
  if (clustered) {
    const std::size_t total = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
    if (total < n_out) widths.back() += n_out - total;
  }

  std::vector<BnnFunction::Layer> layers;
  std::size_t in = n_in;
  for (std::size_t w : widths) {
    layers.push_back(dense_layer(in, w, true, config.weight_scale, rng));
    in = w;
  }
  std::vector<BnnFunction::Tap> taps;
  if (clustered) {
    std::vector<BnnFunction::Tap> candidates;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t u = 0; u < layers[l].out; ++u) candidates.push_back({l, u});
    }
    rng.shuffle(std::span<BnnFunction::Tap>(candidates));
    taps.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n_out));
    // Canonical order: by depth, then unit.
    std::sort(taps.begin(), taps.end(), [](const auto& a, const auto& b) {
      return a.layer != b.layer ? a.layer < b.layer : a.unit < b.unit;
    });
  } else {
    layers.push_back(dense_layer(in, n_out, false, config.weight_scale, rng));
    for (std::size_t u = 0; u < n_out; ++u) taps.push_back({layers.size() - 1, u});
  }

  std::vector<double> dense;
  for (const auto& layer : layers) dense.insert(dense.end(), layer.weights.begin(), layer.weights.end());
  if (config.edge_drop_prob > 0.0) {
    for (int attempt = 0; attempt < kMaxMaskRedraws; ++attempt) {
      draw_masks(layers, dense, config.edge_drop_prob, rng);
      auto function = std::make_shared<BnnFunction>(n_in, layers, taps);
      if (function->taps_reachable()) return function;
    }
    draw_masks(layers, dense, 0.0, rng);  // fall back to the dense graph
  }
  return std::make_shared<BnnFunction>(n_in, std::move(layers), std::move(taps));
}

}  // namespace

void BnnPriorConfig::validate() const {
  require(hidden_layers.first >= 1 && hidden_layers.first <= hidden_layers.second, "hidden_layers",
          "need 1 <= lo <= hi");
  require(width.first >= 1 && width.first <= width.second, "width", "need 1 <= lo <= hi");
  require(weight_scale >= 0.0 && std::isfinite(weight_scale), "weight_scale", "need a finite value >= 0");
  require(edge_drop_prob >= 0.0 && edge_drop_prob < 1.0, "edge_drop_prob", "need a value in [0, 1)");
  require(noise_family_weights.size() == 4, "noise_family_weights", "need four weights");
  double total = 0.0;
  for (double w : noise_family_weights) {
    require(w >= 0.0, "noise_family_weights", "weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, "noise_family_weights", "weights must not all be zero");
  require(discretize_fraction >= 0.0 && discretize_fraction <= 1.0, "discretize_fraction",
          "need a value in [0, 1]");
  require(d_x.first >= 1 && d_x.first <= d_x.second, "d_x", "need 1 <= lo <= hi");
  require(covariate_roots.first >= 1 && covariate_roots.first <= covariate_roots.second,
          "covariate_roots", "need 1 <= lo <= hi");
  require(positivity_epsilon > 0.0 && positivity_epsilon < 0.5, "positivity_epsilon",
          "need a value in (0, 0.5)");
}

BnnFunction::BnnFunction(std::size_t n_in, std::vector<Layer> layers, std::vector<Tap> taps)
    : n_in_(n_in), layers_(std::move(layers)), taps_(std::move(taps)) {
  std::size_t in = n_in_;
  for (const auto& layer : layers_) {
    if (layer.in != in || layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      throw InvalidStructureError("BNN layer shapes are inconsistent");
    }
    layer_start_.push_back(n_units_);
    n_units_ += layer.out;
    in = layer.out;
  }
  for (const auto& tap : taps_) {
    if (tap.layer >= layers_.size() || tap.unit >= layers_[tap.layer].out) {
      throw InvalidStructureError("BNN output tap out of range");
    }
  }
}

void BnnFunction::evaluate(std::span<const double> parents, std::span<double> outputs) const {
  // Activations of every layer are kept because taps may read hidden units.
  thread_local std::vector<double> activations;
  activations.resize(n_units_);
  const double* input = parents.data();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    double* out = activations.data() + layer_start_[l];
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * input[i];
      out[o] = layer.tanh ? std::tanh(acc) : acc;
    }
    input = out;
  }
  for (std::size_t k = 0; k < taps_.size(); ++k) {
    outputs[k] = activations[layer_start_[taps_[k].layer] + taps_[k].unit];
  }
}

double BnnFunction::evaluate1(std::span<const double> inputs) const {
  double out = 0.0;
  evaluate(inputs, std::span<double>(&out, 1));
  return out;
}

bool BnnFunction::reaches(std::size_t input, std::size_t tap) const {
  std::vector<std::uint8_t> live(n_in_, 0);
  live[input] = 1;
  std::vector<std::vector<std::uint8_t>> per_layer;
  for (const auto& layer : layers_) {
    std::vector<std::uint8_t> next(layer.out, 0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (std::size_t i = 0; i < layer.in && !next[o]; ++i) {
        next[o] = live[i] && layer.mask[o * layer.in + i];
      }
    }
    per_layer.push_back(next);
    live = std::move(next);
  }
  return per_layer[taps_[tap].layer][taps_[tap].unit] != 0;
}

bool BnnFunction::taps_reachable() const {
  for (std::size_t t = 0; t < taps_.size(); ++t) {
    bool any = false;
    for (std::size_t i = 0; i < n_in_ && !any; ++i) any = reaches(i, t);
    if (!any) return false;
  }
  return true;
}

std::shared_ptr<BnnFunction> sample_bnn_graph(const BnnPriorConfig& config, std::size_t n_in,
                                              std::size_t n_out, Rng& rng) {
  return sample_graph(config, n_in, n_out, false, rng);
}

std::shared_ptr<BnnFunction> sample_clustered_bnn(const BnnPriorConfig& config, std::size_t n_in,
                                                  std::size_t n_out, Rng& rng) {
  return sample_graph(config, n_in, n_out, true, rng);
}

DiscretizedFunction::DiscretizedFunction(FunctionPtr inner, std::size_t n_out,
                                         std::vector<std::vector<double>> thresholds)
    : inner_(std::move(inner)), thresholds_(std::move(thresholds)) {
  if (thresholds_.size() != n_out) throw InvalidStructureError("one threshold list per output required");
  for (auto& t : thresholds_) std::sort(t.begin(), t.end());
}

void DiscretizedFunction::evaluate(std::span<const double> parents, std::span<double> outputs) const {
  inner_->evaluate(parents, outputs);
  for (std::size_t k = 0; k < thresholds_.size(); ++k) {
    const auto& t = thresholds_[k];
    if (t.empty()) continue;
    double level = 0.0;
    for (double threshold : t) level += outputs[k] > threshold ? 1.0 : 0.0;
    outputs[k] = level;
  }
}

std::size_t DiscretizedFunction::n_discretized() const {
  return static_cast<std::size_t>(std::count_if(thresholds_.begin(), thresholds_.end(),
                                                [](const auto& t) { return !t.empty(); }));
}

}  // namespace causalfm
