#include "causalfm/metrics.hpp"

#include <cmath>
#include <string>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("length mismatch: " + std::to_string(a.size()) + " predictions vs " +
                     std::to_string(b.size()) + " targets");
  }
  if (a.empty()) throw InputError("need at least one evaluation point");
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

PeheResult pehe(std::span<const double> predicted, std::span<const double> true_cate, bool keep_errors) {
  check_lengths(predicted, true_cate);
  PeheResult r;
  r.n_eval = predicted.size();
  std::vector<double> errors(predicted.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    errors[i] = predicted[i] - true_cate[i];
    sq += errors[i] * errors[i];
  }
  r.value = std::sqrt(sq / static_cast<double>(r.n_eval));
  if (keep_errors) r.per_point_errors = std::move(errors);
  return r;
}

double sign_accuracy(std::span<const double> predicted, std::span<const double> true_cate) {
  check_lengths(predicted, true_cate);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += sign_of(predicted[i]) == sign_of(true_cate[i]);
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace causalfm
