#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "causalfm/rng.hpp"
#include "causalfm/scm.hpp"

namespace causalfm {

struct BnnPriorConfig {
  std::pair<int, int> hidden_layers{1, 3};
  std::pair<int, int> width{4, 16};
  double weight_scale = 1.0;  // std of weight and bias draws
  double edge_drop_prob = 0.2;
  // Relative weights of normal, uniform, laplace, logistic covariate noise.
  std::vector<double> noise_family_weights{1.0, 1.0, 1.0, 1.0};
  double discretize_fraction = 0.3;
  std::pair<int, int> d_x{2, 10};
  std::pair<int, int> covariate_roots{2, 8};
  double positivity_epsilon = 0.05;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Random tanh MLP whose weights and biases are i.i.d. N(0, weight_scale^2)
// and whose edges are pruned independently with probability edge_drop_prob.
// Observational variant: the outputs are a final linear layer. Clustered
// variant: the outputs are a random subset of hidden units.
class BnnFunction final : public StructuralFunction {
 public:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major, pruned entries zero
    std::vector<double> bias;
    std::vector<std::uint8_t> mask;  // 1 = edge kept
    bool tanh = true;
  };
  struct Tap {
    std::size_t layer;
    std::size_t unit;
  };

  BnnFunction(std::size_t n_in, std::vector<Layer> layers, std::vector<Tap> taps);

  void evaluate(std::span<const double> parents, std::span<double> outputs) const override;
  double evaluate1(std::span<const double> inputs) const;

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return taps_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<Tap>& taps() const { return taps_; }

  // Whether each tap depends (through unpruned edges) on some input.
  bool taps_reachable() const;
  // Whether a given input reaches a given tap.
  bool reaches(std::size_t input, std::size_t tap) const;

 private:
  std::size_t n_in_;
  std::vector<Layer> layers_;
  std::vector<Tap> taps_;
  std::vector<std::size_t> layer_start_;
  std::size_t n_units_ = 0;
};

std::shared_ptr<BnnFunction> sample_bnn_graph(const BnnPriorConfig& config, std::size_t n_in,
                                              std::size_t n_out, Rng& rng);
std::shared_ptr<BnnFunction> sample_clustered_bnn(const BnnPriorConfig& config, std::size_t n_in,
                                                  std::size_t n_out, Rng& rng);

// Applies per-output thresholds: output k becomes the number of its
// thresholds the wrapped value exceeds (unchanged when it has none).
class DiscretizedFunction final : public StructuralFunction {
 public:
  DiscretizedFunction(FunctionPtr inner, std::size_t n_out, std::vector<std::vector<double>> thresholds);
  void evaluate(std::span<const double> parents, std::span<double> outputs) const override;
  const std::vector<std::vector<double>>& thresholds() const { return thresholds_; }
  std::size_t n_discretized() const;

 private:
  FunctionPtr inner_;
  std::vector<std::vector<double>> thresholds_;
};

}  // namespace causalfm
