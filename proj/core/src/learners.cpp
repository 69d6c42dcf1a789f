#include "causalfm/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

void check_queries(const Dataset& train, const QuerySet& queries) {
  if (queries.d_x != train.d_x()) {
    throw InputError("query dimension " + std::to_string(queries.d_x) + " != training dimension " +
                     std::to_string(train.d_x()));
  }
  if (train.n() == 0) throw EstimationError("empty training set");
}

}  // namespace

std::string to_string(const RegressorSpec& spec) {
  return spec.kind == BaseKind::ridge ? "ridge" : "knn";
}

std::unique_ptr<Regressor> make_regressor(const RegressorSpec& spec) {
  if (spec.kind == BaseKind::ridge) {
    if (!(spec.ridge_penalty >= 0.0)) throw ConfigError("ridge_penalty", "ridge penalty must be >= 0");
    return std::make_unique<RidgeRegressor>(spec.ridge_penalty);
  }
  if (spec.k == 0) throw ConfigError("k", "kNN needs k >= 1");
  return std::make_unique<KnnRegressor>(spec.k);
}

void RidgeRegressor::fit(std::span<const double> x, std::size_t p, std::span<const double> y) {
  const std::size_t n = y.size();
  if (n == 0 || x.size() != n * p) throw InputError("ridge: inconsistent design matrix");
  // Owned copies: reductions over maps of caller memory would depend on its
  // alignment, and so would the last bits of the fit.
  const Eigen::MatrixXd X =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(x.data(), n, p);
  const Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = Y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd Yc = Y.array() - y_mean;
  Eigen::MatrixXd gram = Xc.transpose() * Xc;
  gram.diagonal().array() += penalty_;
  const Eigen::VectorXd w = gram.ldlt().solve(Xc.transpose() * Yc);
  weights_.assign(w.data(), w.data() + p);
  intercept_ = y_mean - x_mean.dot(w);
}

double RidgeRegressor::predict(std::span<const double> x) const {
  double v = intercept_;
  for (std::size_t j = 0; j < weights_.size(); ++j) v += weights_[j] * x[j];
  return v;
}

void KnnRegressor::fit(std::span<const double> x, std::size_t p, std::span<const double> y) {
  if (y.empty() || x.size() != y.size() * p) throw InputError("knn: inconsistent design matrix");
  p_ = p;
  x_.assign(x.begin(), x.end());
  y_.assign(y.begin(), y.end());
}

double KnnRegressor::predict(std::span<const double> x) const {
  const std::size_t n = y_.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < p_; ++j) {
      const double diff = x_[i * p_ + j] - x[j];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  const std::size_t k = std::min(k_, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += y_[dist[i].second];
  return s / static_cast<double>(k);
}

std::vector<double> t_learner(const Dataset& train, const QuerySet& queries, const RegressorSpec& base) {
  check_queries(train, queries);
  const std::size_t p = train.d_x();
  std::vector<double> x_arm[2], y_arm[2];
  for (std::size_t i = 0; i < train.n(); ++i) {
    const int arm = train.a(i) == 1.0 ? 1 : train.a(i) == 0.0 ? 0 : -1;
    if (arm < 0) throw InputError("t_learner needs a binary treatment");
    const auto xi = train.x(i);
    x_arm[arm].insert(x_arm[arm].end(), xi.begin(), xi.end());
    y_arm[arm].push_back(train.y(i));
  }
  for (int arm : {0, 1}) {
    if (y_arm[arm].empty()) {
      throw EstimationError(std::string("t_learner: ") + (arm ? "treated" : "control") + " arm is empty");
    }
  }
  auto f0 = make_regressor(base);
  auto f1 = make_regressor(base);
  f0->fit(x_arm[0], p, y_arm[0]);
  f1->fit(x_arm[1], p, y_arm[1]);
  std::vector<double> cate(queries.m());
  for (std::size_t q = 0; q < queries.m(); ++q) {
    const std::span<const double> xq(queries.x.data() + q * p, p);
    cate[q] = f1->predict(xq) - f0->predict(xq);
  }
  return cate;
}

SLearnerResult s_learner(const Dataset& train, const QuerySet& queries, const RegressorSpec& base) {
  check_queries(train, queries);
  const std::size_t p = train.d_x();
  std::vector<double> design;
  design.reserve(train.n() * (p + 1));
  std::size_t treated = 0;
  for (std::size_t i = 0; i < train.n(); ++i) {
    const auto xi = train.x(i);
    design.insert(design.end(), xi.begin(), xi.end());
    design.push_back(train.a(i));
    treated += train.a(i) == 1.0;
  }
  auto f = make_regressor(base);
  f->fit(design, p + 1, train.outcomes());
  SLearnerResult r;
  const double frac = static_cast<double>(treated) / static_cast<double>(train.n());
  r.low_overlap = std::min(frac, 1.0 - frac) < kLowOverlapFraction;
  r.cate.resize(queries.m());
  std::vector<double> row(p + 1);
  for (std::size_t q = 0; q < queries.m(); ++q) {
    std::copy_n(queries.x.begin() + static_cast<std::ptrdiff_t>(q * p), p, row.begin());
    row[p] = 1.0;
    const double y1 = f->predict(row);
    row[p] = 0.0;
    r.cate[q] = y1 - f->predict(row);
  }
  return r;
}

}  // namespace causalfm
