#include "causalfm/grid_posterior.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "causalfm/error.hpp"
#include "causalfm/sampling.hpp"

namespace causalfm {

namespace {

LinearGaussianForm gaussian_form(const Scm& scm) {
  auto form = linear_gaussian_form(scm);
  if (!form) throw UnsupportedFamilyError("SCM is not linear-Gaussian; exact likelihood unavailable");
  return *form;
}

std::vector<VarId> observed_columns(const Scm& scm) {
  const auto& r = scm.roles();
  if (!r.treatment || !r.outcome) throw PreconditionError("SCM has no treatment/outcome roles");
  std::vector<VarId> cols = r.covariates;
  cols.insert(cols.end(), r.aux.begin(), r.aux.end());
  cols.push_back(*r.treatment);
  cols.push_back(*r.outcome);
  return cols;
}

Eigen::MatrixXd covariance_of(const LinearGaussianForm& form, const std::vector<VarId>& cols) {
  const auto k = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd s(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) s(i, j) = s(j, i) = form.covariance(cols[i], cols[j]);
  }
  return s;
}

double log_sum_exp(const std::vector<double>& v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

std::vector<double> GridPosterior::weights() const {
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
  return w;
}

double gaussian_log_likelihood(const Scm& scm, const Dataset& data) {
  const LinearGaussianForm form = gaussian_form(scm);
  const auto cols = observed_columns(scm);
  const std::size_t k = cols.size();
  if (data.d_x() + data.d_aux() + 2 != k) throw InputError("dataset columns do not match the SCM's roles");
  if (data.n() == 0) throw InputError("empty dataset");

  const Eigen::MatrixXd sigma = covariance_of(form, cols);
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw DegenerateScmError("observational covariance is singular");
  Eigen::VectorXd mu(static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) mu(static_cast<Eigen::Index>(j)) = form.mean[cols[j]];

  // Sum of Mahalanobis terms via the centered scatter matrix.
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::VectorXd row(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < data.n(); ++i) {
    Eigen::Index c = 0;
    for (double v : data.x(i)) row(c++) = v;
    for (double v : data.aux(i)) row(c++) = v;
    row(c++) = data.a(i);
    row(c++) = data.y(i);
    row -= mu;
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(row);
  }
  scatter = scatter.selfadjointView<Eigen::Lower>();
  const double trace = llt.solve(scatter).trace();
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double n = static_cast<double>(data.n());
  return -0.5 * (n * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) + log_det) + trace);
}

GridPosterior grid_posterior(std::vector<Scm> scms, const std::vector<double>& prior_weights,
                             const Dataset& data) {
  if (scms.empty()) throw PreconditionError("grid posterior needs a nonempty family");
  if (prior_weights.size() != scms.size()) throw InputError("one prior weight per SCM required");
  GridPosterior post;
  post.log_weights.resize(scms.size());
  for (std::size_t s = 0; s < scms.size(); ++s) {
    if (!(prior_weights[s] > 0.0)) throw InputError("prior weights must be positive");
    post.log_weights[s] = std::log(prior_weights[s]) + gaussian_log_likelihood(scms[s], data);
  }
  const double z = log_sum_exp(post.log_weights);
  for (double& w : post.log_weights) w -= z;
  post.scms = std::move(scms);
  return post;
}

double MixtureDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * means[i];
  return m;
}

double MixtureDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    v += weights[i] * (stddevs[i] * stddevs[i] + (means[i] - m) * (means[i] - m));
  }
  return v;
}

double MixtureDistribution::pdf(double y) const {
  double p = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double z = (y - means[i]) / stddevs[i];
    p += weights[i] * std::exp(-0.5 * z * z) / (stddevs[i] * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

MixtureDistribution interventional_conditional(const Scm& scm, std::span<const double> x, double a) {
  const auto& r = scm.roles();
  if (!r.treatment || !r.outcome) throw PreconditionError("SCM has no treatment/outcome roles");
  if (x.size() != r.covariates.size()) throw InputError("query dimension does not match the covariates");
  const Scm intervened = scm.intervene(std::map<VarId, double>{{*r.treatment, a}});
  const LinearGaussianForm form = gaussian_form(intervened);
  const VarId y = *r.outcome;
  double mean = form.mean[y];
  double var = form.covariance(y, y);
  if (!r.covariates.empty()) {
    const Eigen::MatrixXd sxx = covariance_of(form, r.covariates);
    const auto d = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd syx(d), dx(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      syx(j) = form.covariance(y, r.covariates[static_cast<std::size_t>(j)]);
      dx(j) = x[static_cast<std::size_t>(j)] - form.mean[r.covariates[static_cast<std::size_t>(j)]];
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(sxx);
    if (ldlt.info() != Eigen::Success) throw DegenerateScmError("covariate covariance is singular");
    mean += syx.dot(ldlt.solve(dx));
    var -= syx.dot(ldlt.solve(syx));
  }
  return {{1.0}, {mean}, {std::sqrt(std::max(var, 0.0))}};
}

MixtureDistribution exact_ppid_grid(const GridPosterior& posterior, std::span<const double> x, double a) {
  MixtureDistribution mix;
  const auto w = posterior.weights();
  for (std::size_t s = 0; s < posterior.scms.size(); ++s) {
    const auto c = interventional_conditional(posterior.scms[s], x, a);
    mix.weights.push_back(w[s]);
    mix.means.push_back(c.means[0]);
    mix.stddevs.push_back(c.stddevs[0]);
  }
  return mix;
}

MixtureDistribution exact_ppid_grid(const std::vector<Scm>& scms, const std::vector<double>& prior_weights,
                                    const Dataset& data, std::span<const double> x, double a) {
  return exact_ppid_grid(grid_posterior(scms, prior_weights, data), x, a);
}

}  // namespace causalfm
