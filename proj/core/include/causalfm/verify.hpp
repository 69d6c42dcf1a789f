#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causalfm/linear_iv.hpp"
#include "causalfm/rng.hpp"

namespace causalfm {

enum class CheckStatus { pass, fail, skipped };

std::string_view to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
};

struct VerifyOptions {
  std::size_t mc_n = 1'000'000;
  std::uint64_t seed = 0;
  std::size_t n_scms = 50;
  std::size_t n_mc_scms = 20;
};

// Below this sample size Monte-Carlo checks are reported as skipped.
inline constexpr std::size_t kMinMonteCarloN = 10'000;

// Coefficients uniform in [-2, 2], kappa = 0, rejecting Var(A|z) or
// Var(Y|a) below 1e-2 and instruments with |alpha beta| below 0.1.
LinearIvScm random_identified_scm(Rng& rng);

// Slope estimates with influence-function standard errors from n draws of
// a linear IV SCM (rows from Rng(seed, 0) in sequence).
struct MonteCarloIv {
  double alpha = 0.0, alpha_se = 0.0;  // sqrt(Var Z)
  double beta = 0.0, beta_se = 0.0;    // Cov(Z,A) / Var(Z)
  double zeta = 0.0, zeta_se = 0.0;    // Cov(Z,Y) / Cov(Z,A)
  double naive = 0.0, naive_se = 0.0;  // Cov(A,Y) / Var(A)
};

MonteCarloIv monte_carlo_iv(const LinearIvScm& scm, std::size_t n, std::uint64_t seed);

// Runs the linear-IV construction oracles, identification and back-door-bias
// checks, the C-DAG validity oracles and the SCM consistency checks.
std::vector<CheckResult> run_verify(const VerifyOptions& options);

}  // namespace causalfm
