#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace causalfm {

struct PeheResult {
  double value = 0.0;
  std::size_t n_eval = 0;
  std::optional<std::vector<double>> per_point_errors;  // predicted - true
};

// Root-mean-squared CATE error. Throws InputError on a length mismatch or
// empty input.
PeheResult pehe(std::span<const double> predicted, std::span<const double> true_cate,
                bool keep_errors = false);

// Fraction of points where sign(predicted) == sign(true); zero counts as
// its own sign.
double sign_accuracy(std::span<const double> predicted, std::span<const double> true_cate);

double mean(std::span<const double> values);
// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> values);
// Population (n) standard deviation.
double population_std(std::span<const double> values);

}  // namespace causalfm
