#pragma once

#include <cstdint>
#include <string>

#include "causalfm/prior.hpp"
#include "causalfm/sampling.hpp"
#include "causalfm/scm.hpp"

namespace causalfm {

struct ConstraintResult {
  bool pass = true;
  std::string which;   // failing constraint ("positivity", "relevance", ...)
  std::string detail;
  double min_propensity = 1.0;
  double max_propensity = 0.0;
};

inline constexpr std::size_t kPropensityDraws = 16;
// Instrument relevance: |average effect of Z on A| per unit of Z must reach
// this fraction of sd(A).
inline constexpr double kRelevanceCheckFloor = 1e-3;

// Empirical check of the setting's constraint set on a probe sample.
// Propensities P(node = 1 | observed parents) are exact for gates whose score
// depends only on observed parents; otherwise they are averaged over
// kPropensityDraws redraws of the latent parents that are not ancestors of
// the observed ones. Every propensity must lie in [eps/2, 1 - eps/2].
ConstraintResult check_constraints(const Scm& scm, const SettingSpec& setting, std::size_t n_probe,
                                   std::uint64_t seed, double epsilon = 0.05);

// Per-row propensity of a binary node given its observed parents, with the
// probe's own values (or `override_parent` fixed at `override_value`).
std::vector<double> conditional_propensity(const Scm& scm, VarId node, const Table& values,
                                           std::uint64_t seed,
                                           std::optional<VarId> override_parent = std::nullopt,
                                           double override_value = 0.0);

}  // namespace causalfm
