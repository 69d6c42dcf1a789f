#pragma once

#include <cmath>
#include <memory>

#include "causalfm/dataset.hpp"
#include "causalfm/scm.hpp"

namespace causalfm::fixtures {

inline double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Discrete front-door SCM: X ~ Bern(1/2); U confounds A and Y; M depends on
// (X, A) only; Y = M + 0.5 X + 0.7 M X + 0.8 U + 0.5 U_Y. Its CATE is
// (sig(1 + 0.5x) - sig(-0.5 + 0.5x)) (1 + 0.7x).
inline Scm front_door_toy() {
  Scm::Builder b;
  const VarId ux = b.add_latent("U_X", VarKind::latent_noise, {}, "U_X");
  const VarId u = b.add_latent("U", VarKind::latent_confounder, {}, "U");
  const VarId ua = b.add_latent("U_A", VarKind::latent_noise, {}, "U_A");
  const VarId um = b.add_latent("U_M", VarKind::latent_noise, {}, "U_M");
  const VarId uy = b.add_latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  const VarId x = b.add_observed("X", "X");
  const VarId a = b.add_observed("A", "A");
  const VarId m = b.add_observed("M", "M");
  const VarId y = b.add_observed("Y", "Y");
  auto fn = [](LambdaFunction::Fn f) { return std::make_shared<LambdaFunction>(std::move(f)); };
  b.add_mechanism("X", {ux}, {x}, fn([](auto p, auto o) { o[0] = standard_normal_cdf(p[0]) < 0.5 ? 1.0 : 0.0; }));
  b.add_mechanism("A", {x, u, ua}, {a}, fn([](auto p, auto o) {
                    o[0] = standard_normal_cdf(p[2]) < sig(-0.3 + 0.8 * p[0] + 1.2 * p[1]) ? 1.0 : 0.0;
                  }));
  b.add_mechanism("M", {x, a, um}, {m}, fn([](auto p, auto o) {
                    o[0] = standard_normal_cdf(p[2]) < sig(-0.5 + 0.5 * p[0] + 1.5 * p[1]) ? 1.0 : 0.0;
                  }));
  b.add_mechanism("Y", {x, m, u, uy}, {y}, fn([](auto p, auto o) {
                    o[0] = p[1] + 0.5 * p[0] + 0.7 * p[1] * p[0] + 0.8 * p[2] + 0.5 * p[3];
                  }));
  auto& r = b.roles();
  r.setting = Setting::front_door;
  r.covariates = {x};
  r.aux = {m};
  r.treatment = a;
  r.outcome = y;
  return std::move(b).build();
}

inline double front_door_toy_cate(double x) { return (sig(1.0 + 0.5 * x) - sig(-0.5 + 0.5 * x)) * (1.0 + 0.7 * x); }

// Back-door linear SCM: X ~ N(0,1), A = 1{Phi(U_A) < sig(X)}, Y = X + A (1 + X) + U_Y.
inline Scm linear_backdoor() {
  Scm::Builder b;
  const VarId ux = b.add_latent("U_X", VarKind::latent_noise, {}, "XU");
  const VarId ua = b.add_latent("U_A", VarKind::latent_noise, {}, "U_A");
  const VarId uy = b.add_latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  const VarId x = b.add_observed("X1", "XU");
  const VarId a = b.add_observed("A", "A");
  const VarId y = b.add_observed("Y", "Y");
  auto fn = [](LambdaFunction::Fn f) { return std::make_shared<LambdaFunction>(std::move(f)); };
  b.add_mechanism("XU", {ux}, {x}, std::make_shared<LinearFunction>(std::vector<double>{1.0}, std::vector<double>{0.0}));
  // A = 1{Phi(U_A) < sigmoid(X1)}, as a gate so propensities are exact.
  auto score = std::make_shared<LinearFunction>(std::vector<double>{1.0}, std::vector<double>{0.0});
  b.add_mechanism("A", {x, ua}, {a}, std::make_shared<BernoulliGate>(score, 1, 1e-9));
  b.add_mechanism("Y", {x, a, uy}, {y}, fn([](auto p, auto o) { o[0] = p[0] + p[1] * (1.0 + p[0]) + p[2]; }));
  auto& r = b.roles();
  r.setting = Setting::back_door;
  r.covariates = {x};
  r.treatment = a;
  r.outcome = y;
  return std::move(b).build();
}

inline Dataset make_dataset(std::size_t d_x, const std::vector<std::vector<double>>& x, const std::vector<double>& a,
                            const std::vector<double>& y, std::size_t d_aux = 0,
                            const std::vector<std::vector<double>>& aux = {}) {
  Dataset data(DatasetSchema::make(d_aux ? Setting::front_door : Setting::back_door, d_x, d_aux, TreatmentType::binary));
  for (std::size_t i = 0; i < a.size(); ++i) {
    data.push_row(x[i], d_aux ? std::span<const double>(aux[i]) : std::span<const double>(), a[i], y[i]);
  }
  return data;
}

}  // namespace causalfm::fixtures
