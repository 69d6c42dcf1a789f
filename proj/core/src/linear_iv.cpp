#include "causalfm/linear_iv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

void require_identified(const LinearIvScm& scm, const char* op) {
  if (scm.kappa != 0.0) throw PreconditionError(std::string(op) + " requires kappa = 0");
}

double checked_sqrt(const char* quantity, double value) {
  if (value < 0.0) {
    throw InfeasibleConstructionError(quantity, value,
                                      std::string("infeasible construction: ") + quantity + " = " +
                                          std::to_string(value));
  }
  return std::sqrt(value);
}

}  // namespace

LinearIvScm LinearIvScm::from_coefficients(const std::array<double, 8>& c) {
  return {c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]};
}

double CovMatrix3::max_abs_diff(const CovMatrix3& other) const {
  const auto a = entries();
  const auto b = other.entries();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

bool CovMatrix3::is_psd(double tolerance) const {
  Eigen::Matrix3d m;
  m << var_z, cov_za, cov_zy, cov_za, var_a, cov_ay, cov_zy, cov_ay, var_y;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tolerance;
}

CovMatrix3 observational_covariance(const LinearIvScm& s) {
  const double kb_g = s.kappa * s.beta + s.gamma;
  CovMatrix3 c;
  c.var_z = s.alpha * s.alpha + s.kappa * s.kappa;
  c.cov_za = s.alpha * s.alpha * s.beta + s.kappa * kb_g;
  c.var_a = (s.alpha * s.beta) * (s.alpha * s.beta) + kb_g * kb_g + s.delta * s.delta;
  c.cov_zy = s.zeta * c.cov_za + s.eta * s.kappa;
  c.cov_ay = s.zeta * c.var_a + s.eta * kb_g;
  c.var_y = s.zeta * s.zeta * c.var_a + 2.0 * s.zeta * s.eta * kb_g + s.eta * s.eta + s.theta * s.theta;
  return c;
}

LinearIvScm construct_confounded_equivalent(const LinearIvScm& star, double zeta_new, double kappa_new) {
  require_identified(star, "construct_confounded_equivalent");
  if (kappa_new == 0.0) throw PreconditionError("kappa_new must be nonzero");
  if (!(std::abs(kappa_new) < std::abs(star.alpha))) {
    throw PreconditionError("construct_confounded_equivalent requires |kappa_new| < |alpha*|");
  }
  const CovMatrix3 target = observational_covariance(star);
  LinearIvScm s;
  s.zeta = zeta_new;
  s.kappa = kappa_new;
  s.alpha = std::sqrt(target.var_z - kappa_new * kappa_new);
  // Cov(Z,Y) = zeta Cov(Z,A) + eta kappa
  s.eta = (target.cov_zy - zeta_new * target.cov_za) / kappa_new;
  if (s.eta == 0.0) {
    throw InfeasibleConstructionError("eta", 0.0, "infeasible construction: eta = 0 (zeta unchanged or irrelevant instrument)");
  }
  // Cov(A,Y) = zeta Var(A) + eta (kappa beta + gamma)
  const double kb_g = (target.cov_ay - zeta_new * target.var_a) / s.eta;
  s.beta = (target.cov_za - kappa_new * kb_g) / (s.alpha * s.alpha);
  s.gamma = kb_g - kappa_new * s.beta;
  const double ab = s.alpha * s.beta;
  s.delta = checked_sqrt("delta^2", target.var_a - ab * ab - kb_g * kb_g);
  s.theta = checked_sqrt("theta^2", target.var_y - zeta_new * zeta_new * target.var_a -
                                        2.0 * zeta_new * s.eta * kb_g - s.eta * s.eta);
  return s;
}

LinearIvScm construct_noiseless_treatment(const LinearIvScm& star) {
  require_identified(star, "construct_noiseless_treatment");
  if (!(star.var_a_given_z() > 0.0) || !(star.var_y_given_a() > 0.0)) {
    throw PreconditionError("noiseless construction requires Var(A|z) > 0 and Var(Y|a) > 0");
  }
  if (star.delta == 0.0) return star;
  LinearIvScm s = star;
  s.delta = 0.0;
  s.gamma = std::sqrt(star.var_a_given_z());
  s.eta = star.eta * star.gamma / s.gamma;  // preserves eta * gamma
  s.theta = checked_sqrt("theta^2", star.var_y_given_a() - s.eta * s.eta);
  return s;
}

LinearIvScm construct_noiseless_outcome(const LinearIvScm& star) {
  require_identified(star, "construct_noiseless_outcome");
  if (!(star.var_a_given_z() > 0.0) || !(star.var_y_given_a() > 0.0)) {
    throw PreconditionError("noiseless construction requires Var(A|z) > 0 and Var(Y|a) > 0");
  }
  if (star.theta == 0.0) return star;
  LinearIvScm s = star;
  s.theta = 0.0;
  s.eta = std::sqrt(star.var_y_given_a());
  s.gamma = star.eta * star.gamma / s.eta;
  s.delta = checked_sqrt("delta^2", star.var_a_given_z() - s.gamma * s.gamma);
  return s;
}

IdentifiedCoefficients identify_coefficients(const CovMatrix3& cov) {
  if (!(cov.var_z > 0.0)) throw PreconditionError("identify_coefficients requires Var(Z) > 0");
  if (std::abs(cov.cov_za) <= kWeakInstrumentTolerance) {
    throw WeakInstrumentError("weak instrument: |Cov(Z,A)| = " + std::to_string(std::abs(cov.cov_za)));
  }
  return {std::sqrt(cov.var_z), cov.cov_za / cov.var_z, cov.cov_zy / cov.cov_za};
}

double backdoor_bias(const LinearIvScm& s) {
  require_identified(s, "backdoor_bias");
  const double denominator = s.gamma * s.gamma + s.delta * s.delta + (s.beta * s.alpha) * (s.beta * s.alpha);
  if (!(denominator > 0.0)) throw DegenerateScmError("backdoor_bias: Var(A) = 0");
#ifdef CAUSALFM_MUTATE_BACKDOOR_BIAS
  return s.zeta - s.eta * s.gamma / denominator;
#else
  return s.zeta + s.eta * s.gamma / denominator;
#endif
}

Scm to_scm(const LinearIvScm& s) {
  Scm::Builder b;
  const int u_children = (s.kappa != 0.0) + (s.gamma != 0.0) + (s.eta != 0.0);
  std::optional<VarId> u;
  if (u_children > 0) {
    u = b.add_latent("U", u_children >= 2 ? VarKind::latent_confounder : VarKind::latent_noise, {}, "U");
  }
  std::optional<VarId> eps_z, eps_a, eps_y;
  if (s.alpha != 0.0) eps_z = b.add_latent("eps_Z", VarKind::latent_noise, {}, "U_Z");
  if (s.delta != 0.0) eps_a = b.add_latent("eps_A", VarKind::latent_noise, {}, "U_A");
  if (s.theta != 0.0) eps_y = b.add_latent("eps_Y", VarKind::latent_noise, {}, "U_Y");
  const VarId z = b.add_observed("Z", "Z");
  const VarId a = b.add_observed("A", "A");
  const VarId y = b.add_observed("Y", "Y");

  auto linear = [&](std::vector<std::pair<std::optional<VarId>, double>> terms, VarId out,
                    const std::string& cluster) {
    std::vector<VarId> parents;
    std::vector<double> weights;
    for (const auto& [var, w] : terms) {
      if (var && w != 0.0) {
        parents.push_back(*var);
        weights.push_back(w);
      }
    }
    b.add_mechanism(cluster, parents, {out},
                    std::make_shared<LinearFunction>(std::move(weights), std::vector<double>{0.0}));
  };
  linear({{eps_z, s.alpha}, {u, s.kappa}}, z, "Z");
  linear({{z, s.beta}, {eps_a, s.delta}, {u, s.gamma}}, a, "A");
  linear({{a, s.zeta}, {u, s.eta}, {eps_y, s.theta}}, y, "Y");

  auto& roles = b.roles();
  roles.setting = Setting::iv;
  roles.aux = {z};
  roles.treatment = a;
  roles.outcome = y;
  roles.treatment_type = TreatmentType::continuous;
  return std::move(b).build();
}

CovEstimate sample_covariance(std::span<const double> z, std::span<const double> a,
                              std::span<const double> y) {
  const std::size_t n = z.size();
  if (n < 2 || a.size() != n || y.size() != n) throw InputError("sample_covariance needs equal lengths >= 2");
  auto mean = [n](std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(n);
  };
  const double mz = mean(z), ma = mean(a), my = mean(y);
  // Entry order matches CovMatrix3::entries().
  const std::array<std::pair<int, int>, 6> pairs{{{0, 0}, {0, 1}, {1, 1}, {0, 2}, {1, 2}, {2, 2}}};
  std::array<double, 6> sum{}, sum_sq{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 3> d{z[i] - mz, a[i] - ma, y[i] - my};
    for (std::size_t k = 0; k < 6; ++k) {
      const double p = d[pairs[k].first] * d[pairs[k].second];
      sum[k] += p;
      sum_sq[k] += p * p;
    }
  }
  std::array<double, 6> cov{}, se{};
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < 6; ++k) {
    const double m = sum[k] / nn;
    cov[k] = sum[k] / (nn - 1.0);
    se[k] = std::sqrt(std::max(0.0, sum_sq[k] / nn - m * m) / nn);
  }
  return {{cov[0], cov[1], cov[2], cov[3], cov[4], cov[5]}, {se[0], se[1], se[2], se[3], se[4], se[5]}};
}

}  // namespace causalfm
