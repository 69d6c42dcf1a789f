#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "causalfm/dataset.hpp"

namespace causalfm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ArchConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 3;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t n_classes = 3;
  std::size_t max_context = 1024;
  std::size_t d_x_max = 10;

  // Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

// Contiguous block of the flat parameter vector.
struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Parameter layout, in storage order (D = d_model, P = d_x_max, F = d_ff,
// K = n_classes):
//   enc_x.W[D x P], enc_x.b[D], enc_a.w[D], enc_a.b[D], enc_y.w[D], enc_y.b[D], mask[D]
//   per layer l: ln1.g[D], ln1.b[D], Wq[D x D], bq[D], Wk[D x D], bk[D],
//                Wv[D x D], bv[D], Wo[D x D], bo[D], ln2.g[D], ln2.b[D],
//                W1[F x D], b1[F], W2[D x F], b2[D]
//   lnf.g[D], lnf.b[D], head.W1[D x D], head.b1[D], head.W2[K x D], head.b2[K]
// Matrices are row-major with shape (out x in).
std::vector<ParamGroup> param_layout(const ArchConfig& arch);
std::size_t param_count(const ArchConfig& arch);

// Query covariates, row-major m x d_x.
struct QuerySet {
  std::size_t d_x = 0;
  std::vector<double> x;

  std::size_t m() const { return d_x == 0 ? 0 : x.size() / d_x; }
};

// Context and queries after canonical row ordering, standardization by the
// context's statistics, and padding/truncation of covariates to d_x_max.
struct PreparedInput {
  RowMatrix x_ctx;  // n x d_x_max
  Eigen::VectorXd a_ctx;
  Eigen::VectorXd y_ctx;
  RowMatrix x_query;  // m x d_x_max
  double y_mean = 0.0;
  double y_std = 1.0;

  std::size_t n() const { return static_cast<std::size_t>(a_ctx.size()); }
  std::size_t m() const { return static_cast<std::size_t>(x_query.rows()); }
};

// Context rows are sorted lexicographically by (x, a, y) before any
// arithmetic, which makes every downstream result independent of the
// order of the context rows, bit for bit.
PreparedInput prepare_input(const ArchConfig& arch, const Dataset& context, const QuerySet& queries);

// Row-attention transformer q(class | context, x) with a discretized-effect
// head. Context tokens attend to context tokens; query tokens attend to
// context tokens only.
class PfnModel {
 public:
  PfnModel(const ArchConfig& arch, std::uint64_t seed);
  PfnModel(const ArchConfig& arch, std::vector<double> params);

  const ArchConfig& arch() const { return arch_; }
  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }
  std::size_t param_count() const { return params_.size(); }

  // Zeroes the last head layer so that every prediction is uniform.
  void zero_head();

  // m x n_classes class probabilities.
  RowMatrix forward(const Dataset& context, const QuerySet& queries) const;
  RowMatrix forward(const PreparedInput& input) const;

  // Mean NLL of `targets` over the queries; adds d(loss)/d(params) into
  // `grad` (length param_count()). Returns the loss.
  double loss_gradient(const PreparedInput& input, std::span<const int> targets,
                       std::span<double> grad) const;

 private:
  ArchConfig arch_;
  std::vector<double> params_;
};

struct NllResult {
  double value = 0.0;
  bool clamped = false;  // some target probability was below 1e-12
};

inline constexpr double kProbabilityFloor = 1e-12;

NllResult nll_loss(const RowMatrix& probs, std::span<const int> targets);

struct CatePrediction {
  double point = 0.0;
  std::vector<double> class_probs;
};

// point = sum_k probs_k * bin_values_k.
CatePrediction predict_cate(std::span<const double> probs, std::span<const double> bin_values);

}  // namespace causalfm
