#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "causalfm/dataset.hpp"
#include "causalfm/model.hpp"

namespace causalfm {

enum class BaseKind { ridge, knn };

struct RegressorSpec {
  BaseKind kind = BaseKind::ridge;
  double ridge_penalty = 1e-8;  // intercept is not penalized
  std::size_t k = 10;

  static RegressorSpec ridge(double penalty = 1e-8) { return {BaseKind::ridge, penalty, 10}; }
  static RegressorSpec knn(std::size_t k = 10) { return {BaseKind::knn, 1e-3, k}; }
};

std::string to_string(const RegressorSpec& spec);

class Regressor {
 public:
  virtual ~Regressor() = default;
  // x: n x p row-major.
  virtual void fit(std::span<const double> x, std::size_t p, std::span<const double> y) = 0;
  virtual double predict(std::span<const double> x) const = 0;
};

std::unique_ptr<Regressor> make_regressor(const RegressorSpec& spec);

// Closed-form ridge on centered data: (Xc'Xc + lambda I) w = Xc'yc.
class RidgeRegressor final : public Regressor {
 public:
  explicit RidgeRegressor(double penalty) : penalty_(penalty) {}
  void fit(std::span<const double> x, std::size_t p, std::span<const double> y) override;
  double predict(std::span<const double> x) const override;
  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }

 private:
  double penalty_;
  std::vector<double> weights_;
  double intercept_ = 0.0;
};

// Mean outcome of the k nearest training rows (Euclidean; ties by index).
class KnnRegressor final : public Regressor {
 public:
  explicit KnnRegressor(std::size_t k) : k_(k) {}
  void fit(std::span<const double> x, std::size_t p, std::span<const double> y) override;
  double predict(std::span<const double> x) const override;

 private:
  std::size_t k_;
  std::size_t p_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
};

// Separate regressions on treated and control rows; throws EstimationError
// when either arm is empty.
std::vector<double> t_learner(const Dataset& train, const QuerySet& queries,
                              const RegressorSpec& base = RegressorSpec::ridge());

struct SLearnerResult {
  std::vector<double> cate;
  bool low_overlap = false;  // an arm holds fewer than kLowOverlapFraction of rows
};

inline constexpr double kLowOverlapFraction = 0.05;

// One regression on (x, a); CATE = f(x, 1) - f(x, 0).
SLearnerResult s_learner(const Dataset& train, const QuerySet& queries,
                         const RegressorSpec& base = RegressorSpec::ridge());

}  // namespace causalfm
