#pragma once

#include <vector>

#include "causalfm/dataset.hpp"
#include "causalfm/scm.hpp"

namespace causalfm {

// Exact posterior over a finite family of linear-Gaussian SCMs.
struct GridPosterior {
  std::vector<Scm> scms;
  std::vector<double> log_weights;  // normalized: logsumexp = 0

  std::vector<double> weights() const;
};

// Exact log-likelihood of the dataset's (x, aux, a, y) columns under the
// SCM's observational Gaussian law. Throws UnsupportedFamilyError for
// non-Gaussian or nonlinear SCMs and DegenerateScmError for a singular
// covariance.
double gaussian_log_likelihood(const Scm& scm, const Dataset& data);

// log posterior = log prior + log likelihood, normalized in log space.
GridPosterior grid_posterior(std::vector<Scm> scms, const std::vector<double>& prior_weights,
                             const Dataset& data);

// Gaussian mixture over Y.
struct MixtureDistribution {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stddevs;

  double mean() const;
  double variance() const;
  double pdf(double y) const;
};

// Law of Y given X = x after do(A = a) under one linear-Gaussian SCM.
MixtureDistribution interventional_conditional(const Scm& scm, std::span<const double> x, double a);

// PPID: the posterior-weighted mixture of interventional conditionals.
MixtureDistribution exact_ppid_grid(const GridPosterior& posterior, std::span<const double> x, double a);

// Convenience: posterior followed by PPID.
MixtureDistribution exact_ppid_grid(const std::vector<Scm>& scms, const std::vector<double>& prior_weights,
                                    const Dataset& data, std::span<const double> x, double a);

}  // namespace causalfm
