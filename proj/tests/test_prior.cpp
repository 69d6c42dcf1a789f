#include <gtest/gtest.h>

#include <algorithm>

#include "causalfm/constraints.hpp"
#include "causalfm/error.hpp"
#include "causalfm/prior.hpp"
#include "causalfm/sampling.hpp"
#include "test_util.hpp"

using namespace causalfm;

namespace {

const Setting kSettings[] = {Setting::back_door, Setting::front_door, Setting::iv};

}  // namespace

TEST(Prior, SameSeedSameScm) {
  BnnPriorConfig cfg;
  for (Setting s : kSettings) {
    const SettingSpec spec = SettingSpec::make(s);
    const Dataset d1 = sample_observational(sample_scm(spec, cfg, 42), 50, 7);
    const Dataset d2 = sample_observational(sample_scm(spec, cfg, 42), 50, 7);
    const Dataset d3 = sample_observational(sample_scm(spec, cfg, 43), 50, 7);
    EXPECT_EQ(d1.outcomes(), d2.outcomes());
    EXPECT_NE(d1.outcomes(), d3.outcomes());
  }
}

TEST(Prior, RolesMatchSetting) {
  BnnPriorConfig cfg;
  cfg.d_x = {3, 5};
  for (Setting s : kSettings) {
    const SettingSpec spec = SettingSpec::make(s);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Scm scm = sample_scm(spec, cfg, seed);
      const ScmRoles& r = scm.roles();
      EXPECT_EQ(r.setting, s);
      EXPECT_GE(r.covariates.size(), 3u);
      EXPECT_LE(r.covariates.size(), 5u);
      EXPECT_EQ(r.aux.size(), s == Setting::back_door ? 0u : 1u);
      EXPECT_EQ(r.treatment_type, s == Setting::iv ? TreatmentType::continuous : TreatmentType::binary);
      const Dataset d = sample_observational(scm, 200, seed);
      if (r.treatment_type == TreatmentType::binary) {
        for (std::size_t i = 0; i < d.n(); ++i) EXPECT_TRUE(d.a(i) == 0.0 || d.a(i) == 1.0);
      }
    }
  }
}

TEST(Prior, DrawsSatisfyConstraints) {
  BnnPriorConfig cfg;
  for (Setting s : kSettings) {
    const SettingSpec spec = SettingSpec::make(s);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const ConstraintResult r = check_constraints(sample_scm(spec, cfg, seed), spec, 500, seed);
      EXPECT_TRUE(r.pass) << to_string(s) << " seed " << seed << ": " << r.which << " " << r.detail;
      if (s != Setting::iv) {
        EXPECT_GE(r.min_propensity, cfg.positivity_epsilon / 2);
        EXPECT_LE(r.max_propensity, 1.0 - cfg.positivity_epsilon / 2);
      }
    }
  }
}

TEST(Constraints, DeterministicTreatmentFailsPositivity) {
  Scm::Builder b;
  const VarId ux = b.add_latent("U_X", VarKind::latent_noise, {}, "XU");
  const VarId uy = b.add_latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  const VarId x = b.add_observed("X1", "XU");
  const VarId a = b.add_observed("A", "A");
  const VarId y = b.add_observed("Y", "Y");
  b.add_mechanism("XU", {ux}, {x}, std::make_shared<LinearFunction>(std::vector<double>{1.0}, std::vector<double>{0.0}));
  b.add_mechanism("A", {x}, {a}, std::make_shared<LambdaFunction>([](auto p, auto o) { o[0] = p[0] > 0 ? 1.0 : 0.0; }));
  b.add_mechanism("Y", {x, a, uy}, {y}, std::make_shared<LambdaFunction>([](auto p, auto o) { o[0] = p[0] + p[1] + p[2]; }));
  auto& r = b.roles();
  r.setting = Setting::back_door;
  r.covariates = {x};
  r.treatment = a;
  r.outcome = y;
  const Scm scm = std::move(b).build();
  const ConstraintResult res = check_constraints(scm, SettingSpec::make(Setting::back_door), 500, 1);
  EXPECT_FALSE(res.pass);
  EXPECT_EQ(res.which, "positivity");
}

namespace {

// Z = 1{Phi(U_Z) < sigmoid(X)}, A = beta Z + U_A, Y = A + X + U_Y.
Scm linear_iv_toy(double beta) {
  Scm::Builder b;
  const VarId ux = b.add_latent("U_X", VarKind::latent_noise, {}, "XU");
  const VarId uz = b.add_latent("U_Z", VarKind::latent_noise, {}, "U_Z");
  const VarId ua = b.add_latent("U_A", VarKind::latent_noise, {}, "U_A");
  const VarId uy = b.add_latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  const VarId x = b.add_observed("X1", "XU");
  const VarId z = b.add_observed("Z", "Z");
  const VarId a = b.add_observed("A", "A");
  const VarId y = b.add_observed("Y", "Y");
  b.add_mechanism("XU", {ux}, {x}, std::make_shared<LinearFunction>(std::vector<double>{1.0}, std::vector<double>{0.0}));
  auto score = std::make_shared<LinearFunction>(std::vector<double>{1.0}, std::vector<double>{0.0});
  b.add_mechanism("Z", {x, uz}, {z}, std::make_shared<BernoulliGate>(score, 1, 1e-9));
  b.add_mechanism("A", {z, ua}, {a}, std::make_shared<LambdaFunction>([beta](auto p, auto o) { o[0] = beta * p[0] + p[1]; }));
  b.add_mechanism("Y", {x, a, uy}, {y}, std::make_shared<LambdaFunction>([](auto p, auto o) { o[0] = p[0] + p[1] + p[2]; }));
  auto& r = b.roles();
  r.setting = Setting::iv;
  r.covariates = {x};
  r.aux = {z};
  r.treatment = a;
  r.outcome = y;
  r.treatment_type = TreatmentType::continuous;
  return std::move(b).build();
}

}  // namespace

TEST(Constraints, IrrelevantInstrumentFails) {
  const SettingSpec spec = SettingSpec::make(Setting::iv);
  const ConstraintResult off = check_constraints(linear_iv_toy(0.0), spec, 500, 1, 0.01);
  EXPECT_FALSE(off.pass);
  EXPECT_EQ(off.which, "relevance");
  // The shared-noise contrast sees a small effect that 500 noisy rows would blur.
  const ConstraintResult on = check_constraints(linear_iv_toy(0.01), spec, 500, 1, 0.01);
  EXPECT_NE(on.which, "relevance") << on.detail;
}

TEST(Constraints, ToyScmsPass) {
  // sigmoid(X) propensities stay above 0.005 for any plausible draw of X.
  const auto r = check_constraints(fixtures::linear_backdoor(), SettingSpec::make(Setting::back_door), 500, 1, 0.01);
  EXPECT_TRUE(r.pass) << r.which << ": " << r.detail;
}

TEST(Constraints, ProbeSizeIsChecked) {
  EXPECT_THROW(check_constraints(fixtures::linear_backdoor(), SettingSpec::make(Setting::back_door), 10, 1),
               PreconditionError);
}

TEST(AssignTreatment, ClippedAndDeterministic) {
  std::vector<double> scores(2000);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 10.0 * (static_cast<double>(i) / 2000.0 - 0.5);
  const auto t1 = assign_treatment(scores, 0.05, 3);
  const auto t2 = assign_treatment(scores, 0.05, 3);
  EXPECT_EQ(t1.treatment, t2.treatment);
  const auto [lo, hi] = std::minmax_element(t1.propensity.begin(), t1.propensity.end());
  EXPECT_GE(*lo, 0.05);
  EXPECT_LE(*hi, 0.95);
  double mean_p = 0.0, mean_a = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    mean_p += t1.propensity[i];
    mean_a += t1.treatment[i];
  }
  EXPECT_NEAR(mean_a / 2000.0, mean_p / 2000.0, 0.04);
}

TEST(PriorConfig, RoundTripAndRejection) {
  BnnPriorConfig p;
  p.width = {3, 9};
  p.weight_scale = 0.75;
  p.noise_family_weights = {1, 0, 2, 0};
  KvConfig kv;
  write_prior_config(p, kv);
  const BnnPriorConfig back = prior_config_from(KvConfig::parse(kv.to_text()));
  EXPECT_EQ(back.width, p.width);
  EXPECT_EQ(back.weight_scale, p.weight_scale);
  EXPECT_EQ(back.noise_family_weights, p.noise_family_weights);
  try {
    prior_config_from(KvConfig::parse("edge_drop_prob = 2\n"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "edge_drop_prob");
  }
}
