#pragma once

#include <cstdint>
#include <vector>

#include "causalfm/dataset.hpp"
#include "causalfm/model.hpp"

namespace causalfm {

inline constexpr std::size_t kMaxMediatorLevels = 16;
inline constexpr std::size_t kMinStratumCount = 5;

// Conditional front-door adjustment for a binary treatment and a discrete
// mediator (the dataset's single auxiliary column), per covariate stratum:
//   tau(x) = sum_m [P(m | A=1, x) - P(m | A=0, x)] sum_a' P(a' | x) E[Y | m, a', x]
// with empirical frequencies and means. Strata are exact matches on the
// covariate vector (covariates must be discrete). Throws SparseStratumError
// naming the cell when a required stratum is empty or below
// kMinStratumCount, and InputError on more than kMaxMediatorLevels levels.
std::vector<double> frontdoor_plugin(const Dataset& train, const QuerySet& x_strata);

struct FrontdoorEstimate {
  std::vector<double> cate;
  std::vector<double> se;  // nonparametric bootstrap
};

FrontdoorEstimate frontdoor_plugin_se(const Dataset& train, const QuerySet& x_strata, std::size_t n_boot,
                                      std::uint64_t seed);

}  // namespace causalfm
