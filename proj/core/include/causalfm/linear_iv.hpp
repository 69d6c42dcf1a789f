#pragma once

#include <array>
#include <span>

#include "causalfm/scm.hpp"

namespace causalfm {

// Z = alpha eps_Z + kappa U
// A = beta Z + delta eps_A + gamma U
// Y = zeta A + eta U + theta eps_Y
// with U, eps_Z, eps_A, eps_Y i.i.d. N(0, 1).
struct LinearIvScm {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double zeta = 0.0;
  double eta = 0.0;
  double theta = 0.0;
  double kappa = 0.0;

  double var_a_given_z() const { return delta * delta + gamma * gamma; }
  double var_y_given_a() const { return eta * eta + theta * theta; }
  std::array<double, 8> coefficients() const {
    return {alpha, beta, gamma, delta, zeta, eta, theta, kappa};
  }
  static LinearIvScm from_coefficients(const std::array<double, 8>& c);
  static LinearIvScm all_ones() { return {1, 1, 1, 1, 1, 1, 1, 0}; }
};

// Covariance of (Z, A, Y), stored as its six unique entries.
struct CovMatrix3 {
  double var_z = 0.0;
  double cov_za = 0.0;
  double var_a = 0.0;
  double cov_zy = 0.0;
  double cov_ay = 0.0;
  double var_y = 0.0;

  std::array<double, 6> entries() const { return {var_z, cov_za, var_a, cov_zy, cov_ay, var_y}; }
  double max_abs_diff(const CovMatrix3& other) const;
  bool is_psd(double tolerance = 1e-10) const;
};

CovMatrix3 observational_covariance(const LinearIvScm& scm);

// Returns an SCM with the requested zeta and kappa whose observational
// covariance equals that of `scm_star` (which must have kappa = 0). Solves
// the six matching equations exactly; throws InfeasibleConstructionError
// (naming "delta^2", "theta^2" or "eta") when no real solution exists.
LinearIvScm construct_confounded_equivalent(const LinearIvScm& scm_star, double zeta_new,
                                            double kappa_new);

// Observationally equivalent SCMs with delta = 0 (resp. theta = 0).
LinearIvScm construct_noiseless_treatment(const LinearIvScm& scm_star);
LinearIvScm construct_noiseless_outcome(const LinearIvScm& scm_star);

struct IdentifiedCoefficients {
  double alpha = 0.0;  // identified up to sign: sqrt(Var Z)
  double beta = 0.0;
  double zeta = 0.0;
};

inline constexpr double kWeakInstrumentTolerance = 1e-8;

IdentifiedCoefficients identify_coefficients(const CovMatrix3& cov);

// Population slope of Y on A: zeta + eta gamma / (gamma^2 + delta^2 + (beta alpha)^2).
double backdoor_bias(const LinearIvScm& scm);

// Executable SCM with observed Z (instrument), A (continuous treatment) and
// Y. Zero noise coefficients drop the corresponding noise variable, so the
// C-DAG reflects noiseless constructions.
Scm to_scm(const LinearIvScm& scm);

// Sample covariance with standard errors of each entry.
struct CovEstimate {
  CovMatrix3 cov;
  CovMatrix3 se;
};

CovEstimate sample_covariance(std::span<const double> z, std::span<const double> a,
                              std::span<const double> y);

}  // namespace causalfm
