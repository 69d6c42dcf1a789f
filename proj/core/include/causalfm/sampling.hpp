#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "causalfm/dataset.hpp"
#include "causalfm/scm.hpp"

namespace causalfm {

// Row-major n x cols matrix of doubles.
struct Table {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Table() = default;
  Table(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::vector<double> column(std::size_t j) const;
};

// Exogenous draws: one column per latent variable (Scm::latents() order).
// Row i uses the generator Rng(seed, first_row + i), so any row can be
// regenerated in isolation.
Table draw_exogenous(const Scm& scm, std::size_t n, std::uint64_t seed, std::uint64_t first_row = 0);

// Propagates exogenous draws through the mechanisms, honoring the SCM's
// interventions. Result has one column per variable (VarId order).
// Throws GenerationError naming the cluster on a non-finite value.
Table evaluate(const Scm& scm, const Table& exogenous);

// Projects an evaluated table onto the SCM's roles.
Dataset to_dataset(const Scm& scm, const Table& values);

Dataset sample_observational(const Scm& scm, std::size_t n, std::uint64_t seed,
                             std::uint64_t first_row = 0);

// Shared-noise potential outcomes: the exogenous draw is made once and the
// SCM is evaluated under do(A = a0) and do(A = a1).
struct CounterfactualSample {
  std::size_t d_x = 0;
  std::vector<double> x;  // n x d_x, identical in both arms
  std::vector<double> y0;
  std::vector<double> y1;
  Table exogenous;

  std::size_t n() const { return y0.size(); }
  std::span<const double> x_row(std::size_t i) const { return {x.data() + i * d_x, d_x}; }
};

CounterfactualSample sample_counterfactual(const Scm& scm, std::size_t n, double a0, double a1,
                                           std::uint64_t seed, std::uint64_t first_row = 0);
CounterfactualSample counterfactual_from(const Scm& scm, Table exogenous, double a0, double a1);

// Exact Gaussian law of a linear SCM with normal noise: every observed
// variable equals mean + loadings . xi with xi ~ N(0, I) over the latents.
struct LinearGaussianForm {
  std::vector<double> mean;      // per variable
  std::vector<double> loadings;  // size() x latents, row-major
  std::size_t n_latent = 0;

  // Covariance between two variables.
  double covariance(VarId a, VarId b) const;
};

// nullopt when any mechanism lacks a linear form or any noise is not normal.
std::optional<LinearGaussianForm> linear_gaussian_form(const Scm& scm);

}  // namespace causalfm

namespace causalfm {

// E[Y(a1) - Y(a0) | covariates] for each exogenous row: latents that are
// ancestors of a covariate are held at the row's values, all other latents
// are redrawn `draws` times (row i, draw d uses Rng(seed, i, d + 1)).
std::vector<double> conditional_average_effect(const Scm& scm, const Table& exogenous, double a0,
                                               double a1, std::size_t draws, std::uint64_t seed);

}  // namespace causalfm
