#include <gtest/gtest.h>

#include <cmath>

#include "causalfm/bnn.hpp"
#include "causalfm/error.hpp"

using namespace causalfm;

namespace {

// Reference forward pass over every unit, written independently of the
// library's evaluation order.
std::vector<double> reference_outputs(const BnnFunction& f, const std::vector<double>& in) {
  std::vector<std::vector<double>> acts;
  std::vector<double> cur = in;
  for (const auto& layer : f.layers()) {
    std::vector<double> next(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (layer.mask[o * layer.in + i]) s += layer.weights[o * layer.in + i] * cur[i];
      }
      next[o] = layer.tanh ? std::tanh(s) : s;
    }
    acts.push_back(next);
    cur = next;
  }
  std::vector<double> out;
  for (const auto& tap : f.taps()) out.push_back(acts.at(tap.layer).at(tap.unit));
  return out;
}

}  // namespace

TEST(Bnn, DeterministicGivenRng) {
  BnnPriorConfig cfg;
  Rng r1(5), r2(5);
  const auto f1 = sample_bnn_graph(cfg, 3, 2, r1);
  const auto f2 = sample_bnn_graph(cfg, 3, 2, r2);
  ASSERT_EQ(f1->layers().size(), f2->layers().size());
  for (std::size_t l = 0; l < f1->layers().size(); ++l) {
    EXPECT_EQ(f1->layers()[l].weights, f2->layers()[l].weights);
    EXPECT_EQ(f1->layers()[l].mask, f2->layers()[l].mask);
  }
}

TEST(Bnn, ShapesAndDepthWithinConfig) {
  BnnPriorConfig cfg;
  cfg.hidden_layers = {2, 2};
  cfg.width = {5, 5};
  Rng rng(1);
  const auto f = sample_bnn_graph(cfg, 3, 2, rng);
  EXPECT_EQ(f->n_in(), 3u);
  EXPECT_EQ(f->n_out(), 2u);
  ASSERT_EQ(f->layers().size(), 3u);  // two hidden layers plus a linear readout
  EXPECT_EQ(f->layers()[0].in, 3u);
  EXPECT_EQ(f->layers()[0].out, 5u);
  EXPECT_FALSE(f->layers().back().tanh);
}

TEST(Bnn, PrunedEdgesHaveZeroWeight) {
  BnnPriorConfig cfg;
  cfg.edge_drop_prob = 0.5;
  Rng rng(3);
  const auto f = sample_bnn_graph(cfg, 4, 1, rng);
  std::size_t dropped = 0;
  for (const auto& layer : f->layers()) {
    for (std::size_t k = 0; k < layer.mask.size(); ++k) {
      if (!layer.mask[k]) {
        EXPECT_EQ(layer.weights[k], 0.0);
        ++dropped;
      }
    }
  }
  EXPECT_GT(dropped, 0u);
}

TEST(Bnn, EvaluateMatchesReference) {
  BnnPriorConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto f = seed % 2 ? sample_bnn_graph(cfg, 3, 2, rng) : sample_clustered_bnn(cfg, 3, 2, rng);
    const std::vector<double> in{0.3, -1.2, 2.0};
    std::vector<double> out(f->n_out());
    f->evaluate(in, out);
    const auto ref = reference_outputs(*f, in);
    ASSERT_EQ(out.size(), ref.size());
    for (std::size_t k = 0; k < out.size(); ++k) EXPECT_NEAR(out[k], ref[k], 1e-12);
  }
}

TEST(Bnn, NoPruningReachesEveryTap) {
  BnnPriorConfig cfg;
  cfg.edge_drop_prob = 0.0;
  Rng rng(9);
  const auto f = sample_clustered_bnn(cfg, 2, 3, rng);
  EXPECT_TRUE(f->taps_reachable());
  for (std::size_t t = 0; t < f->n_out(); ++t) {
    EXPECT_TRUE(f->reaches(0, t));
    EXPECT_TRUE(f->reaches(1, t));
  }
}

TEST(Bnn, DiscretizedFunctionCountsThresholds) {
  auto inner = std::make_shared<LinearFunction>(std::vector<double>{1.0, 0.0, 0.0, 1.0}, std::vector<double>{0.0, 0.0});
  DiscretizedFunction f(inner, 2, {{-1.0, 0.0, 1.0}, {}});
  std::vector<double> out(2);
  f.evaluate(std::vector<double>{0.5, 0.5}, out);
  EXPECT_EQ(out[0], 2.0);
  EXPECT_EQ(out[1], 0.5);
  f.evaluate(std::vector<double>{-3.0, -3.0}, out);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(f.n_discretized(), 1u);
}

TEST(Bnn, ConfigValidationNamesField) {
  auto key_of = [](BnnPriorConfig cfg) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  BnnPriorConfig ok;
  EXPECT_EQ(key_of(ok), "");
  BnnPriorConfig bad = ok;
  bad.edge_drop_prob = 1.5;
  EXPECT_EQ(key_of(bad), "edge_drop_prob");
  bad = ok;
  bad.noise_family_weights = {0, 0, 0, 0};
  EXPECT_EQ(key_of(bad), "noise_family_weights");
  bad = ok;
  bad.d_x = {3, 2};
  EXPECT_EQ(key_of(bad), "d_x");
}
