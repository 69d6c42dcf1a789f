// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "causalfm/benchmark.hpp"
#include "causalfm/cdag.hpp"
#include "causalfm/constraints.hpp"
#include "causalfm/error.hpp"
#include "causalfm/frontdoor.hpp"
#include "causalfm/grid_posterior.hpp"
#include "causalfm/linear_iv.hpp"
#include "causalfm/metrics.hpp"
#include "causalfm/model.hpp"
#include "causalfm/prior.hpp"
#include "causalfm/sampling.hpp"
#include "causalfm/trainer.hpp"
#include "causalfm/verify.hpp"

using namespace causalfm;

namespace {

// Tolerances and sizes.
constexpr double kCovTol = 1e-10;
constexpr double kCoefTol = 1e-10;
constexpr double kPerturb = 1e-3;
constexpr double kUniqueGap = 1e-8;
constexpr double kSeMultiple = 3.0;
constexpr std::size_t kRandomScms = 50;
constexpr std::size_t kMcScms = 20;
constexpr std::size_t kMcN = 1'000'000;
constexpr std::size_t kPosteriorN = 10'000;
constexpr double kPosteriorDrift = 1e-6;
constexpr double kPosteriorConcentration = 0.99;
constexpr std::size_t kSweepPerSetting = 10'000;
constexpr std::size_t kSweepProbe = 200;
constexpr std::size_t kConsistencyPairs = 1000;
constexpr double kSimplexTol = 1e-6;
constexpr int kPermutationTrials = 100;
constexpr double kGradRelTol = 1e-4;
constexpr double kNllMargin = 0.15;
constexpr std::size_t kEvalDatasets = 10;
constexpr std::size_t kEvalContext = 500;
constexpr double kSignAccuracy = 0.80;
constexpr double kPeheRatio = 0.9;
constexpr std::size_t kScalingDatasets = 200;
constexpr double kTCritical = 1.6525;  // one-sided 0.95 quantile, t with 199 df
constexpr std::size_t kFrontdoorN = 100'000;

using Clock = std::chrono::steady_clock;

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

double seconds(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %-4s %-32s %s (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
              seconds(start));
  std::fflush(stdout);
}

// ---- linear IV --------------------------------------------------------------

Outcome equivalent_construction() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t s = 0; s < kRandomScms; ++s) {
    const LinearIvScm star = random_identified_scm(rng);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double zeta_new = star.zeta + rng.uniform(-1.0, 1.0);
      const double kappa_new = rng.uniform(-0.95, 0.95) * std::abs(star.alpha);
      if (zeta_new == star.zeta || kappa_new == 0.0) continue;
      try {
        const LinearIvScm other = construct_confounded_equivalent(star, zeta_new, kappa_new);
        if (other.zeta == star.zeta) return {false, "zeta unchanged"};
        worst = std::max(worst, observational_covariance(other).max_abs_diff(observational_covariance(star)));
        ++pairs;
      } catch (const InfeasibleConstructionError&) {
      }
      if (pairs > s) break;
    }
    if (pairs <= s) return {false, "no feasible pair for SCM " + std::to_string(s)};
  }
  const double t = seconds(start);
  return {worst <= kCovTol && t < 1.0,
          std::to_string(pairs) + " pairs, max |dCov| " + fmt(worst) + ", " + fmt(t, 2) + "s"};
}

Outcome noiseless_construction() {
  const auto start = Clock::now();
  Rng rng(102);
  double worst = 0.0, smallest_gap = 1e300;
  for (std::size_t s = 0; s < kRandomScms; ++s) {
    const LinearIvScm star = random_identified_scm(rng);
    for (bool treatment : {true, false}) {
      const LinearIvScm c = treatment ? construct_noiseless_treatment(star) : construct_noiseless_outcome(star);
      if (c.zeta != star.zeta) return {false, "zeta changed"};
      const CovMatrix3 base = observational_covariance(c);
      worst = std::max(worst, base.max_abs_diff(observational_covariance(star)));
      const auto coef = c.coefficients();
      for (std::size_t k = 0; k < 7; ++k) {
        for (double sign : {-1.0, 1.0}) {
          auto moved = coef;
          moved[k] += sign * kPerturb;
          smallest_gap = std::min(smallest_gap,
                                  observational_covariance(LinearIvScm::from_coefficients(moved)).max_abs_diff(base));
        }
      }
    }
  }
  const double t = seconds(start);
  return {worst <= kCovTol && smallest_gap > kUniqueGap && t < 1.0,
          "max |dCov| " + fmt(worst) + ", min perturbation gap " + fmt(smallest_gap) + ", " + fmt(t, 2) + "s"};
}

// Influence-function SEs of the IV slopes on SCM-simulated data.
struct IvSample {
  IdentifiedCoefficients id;
  double alpha_se, beta_se, zeta_se, naive, naive_se;
};

IvSample simulate_iv(const LinearIvScm& scm, std::size_t n, std::uint64_t seed) {
  const Dataset d = sample_observational(to_scm(scm), n, seed);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = d.aux(i)[0];
  const auto& a = d.treatments();
  const auto& y = d.outcomes();
  const CovEstimate est = sample_covariance(z, a, y);
  IvSample r{};
  r.id = identify_coefficients(est.cov);
  const CovMatrix3& c = est.cov;
  r.naive = c.cov_ay / c.var_a;
  const double mz = mean(z), ma = mean(a), my = mean(y);
  double va = 0, vb = 0, vz = 0, vn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dz = z[i] - mz, da = a[i] - ma, dy = y[i] - my;
    const double fa = (dz * dz - c.var_z) / (2.0 * r.id.alpha);
    const double fb = (dz * da - r.id.beta * dz * dz) / c.var_z;
    const double fz = (dz * dy - r.id.zeta * dz * da) / c.cov_za;
    const double fn = (da * dy - r.naive * da * da) / c.var_a;
    va += fa * fa;
    vb += fb * fb;
    vz += fz * fz;
    vn += fn * fn;
  }
  const double dn = static_cast<double>(n);
  r.alpha_se = std::sqrt(va) / dn;
  r.beta_se = std::sqrt(vb) / dn;
  r.zeta_se = std::sqrt(vz) / dn;
  r.naive_se = std::sqrt(vn) / dn;
  return r;
}

Outcome identification() {
  const auto start = Clock::now();
  Rng rng(103);
  double worst = 0.0;
  for (std::size_t s = 0; s < kRandomScms; ++s) {
    const LinearIvScm star = random_identified_scm(rng);
    const auto id = identify_coefficients(observational_covariance(star));
    worst = std::max({worst, std::abs(id.alpha - std::abs(star.alpha)), std::abs(id.beta - star.beta),
                      std::abs(id.zeta - star.zeta)});
  }
  double worst_z = 0.0;
  for (std::size_t s = 0; s < kMcScms; ++s) {
    const LinearIvScm star = random_identified_scm(rng);
    const IvSample mc = simulate_iv(star, kMcN, 1000 + s);
    worst_z = std::max({worst_z, std::abs(mc.id.alpha - std::abs(star.alpha)) / mc.alpha_se,
                        std::abs(mc.id.beta - star.beta) / mc.beta_se, std::abs(mc.id.zeta - star.zeta) / mc.zeta_se});
  }
  const double t = seconds(start);
  return {worst <= kCoefTol && worst_z <= kSeMultiple && t < 30.0,
          "analytic max err " + fmt(worst) + ", MC max |z| " + fmt(worst_z, 3) + " over " + std::to_string(kMcScms) +
              " SCMs at n=1e6, " + fmt(t, 3) + "s"};
}

Outcome backdoor() {
  Rng rng(104);
  double worst_z = 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    const LinearIvScm star = random_identified_scm(rng);
    const IvSample mc = simulate_iv(star, kMcN, 2000 + s);
    worst_z = std::max(worst_z, std::abs(mc.naive - backdoor_bias(star)) / mc.naive_se);
  }
  bool reduces = true;
  for (std::size_t s = 0; s < kRandomScms; ++s) {
    LinearIvScm g = random_identified_scm(rng), e = g;
    g.gamma = 0.0;
    e.eta = 0.0;
    reduces = reduces && backdoor_bias(g) == g.zeta && backdoor_bias(e) == e.zeta;
  }
  return {worst_z <= kSeMultiple && reduces,
          "MC max |z| " + fmt(worst_z, 3) + " at n=1e6; reduces to zeta: " + (reduces ? "yes" : "no")};
}

Outcome cdag_validity() {
  const bool refs = validate_cdag(backdoor_cdag()).valid && validate_cdag(frontdoor_cdag()).valid &&
                    validate_cdag(iv_cdag()).valid;
  const bool flags = !validate_cdag(iv_cdag(false, false)).valid;
  LinearIvScm both = construct_noiseless_treatment(LinearIvScm::all_ones());
  both.theta = 0.0;
  const bool witness = !validate_cdag(cdag_of(to_scm(both))).valid &&
                       validate_cdag(cdag_of(to_scm(construct_noiseless_treatment(LinearIvScm::all_ones())))).valid &&
                       validate_cdag(cdag_of(to_scm(construct_noiseless_outcome(LinearIvScm::all_ones())))).valid;
  return {refs && flags && witness, std::string("reference C-DAGs valid: ") + (refs ? "yes" : "no") +
                                        ", no-noise flagged: " + (flags ? "yes" : "no") +
                                        ", noiseless witness agrees: " + (witness ? "yes" : "no")};
}

Outcome posterior() {
  const LinearIvScm star = LinearIvScm::all_ones();
  const Dataset data = sample_observational(to_scm(star), kPosteriorN, 105);
  const LinearIvScm twin = construct_confounded_equivalent(star, 1.5, 0.5);
  const auto w = grid_posterior({to_scm(star), to_scm(twin)}, {0.5, 0.5}, data).weights();
  const double drift = std::max(std::abs(w[0] - 0.5), std::abs(w[1] - 0.5));
  LinearIvScm rival = star;
  rival.zeta = 1.5;
  const auto v = grid_posterior({to_scm(star), to_scm(rival)}, {0.5, 0.5}, data).weights();
  return {drift <= kPosteriorDrift && v[0] >= kPosteriorConcentration,
          "equivalent pair drift " + fmt(drift) + ", identified pair true weight " + fmt(v[0], 6)};
}

// ---- prior -----------------------------------------------------------------

Outcome constraint_sweep() {
  const auto start = Clock::now();
  BnnPriorConfig prior;
  const double lo = prior.positivity_epsilon / 2, hi = 1.0 - prior.positivity_epsilon / 2;
  std::ostringstream detail;
  bool ok = true;
  for (Setting s : {Setting::back_door, Setting::front_door, Setting::iv}) {
    const SettingSpec spec = SettingSpec::make(s);
    std::size_t failed = 0, rejected = 0;
    double pmin = 1.0, pmax = 0.0;
    for (std::size_t i = 0; i < kSweepPerSetting; ++i) {
      const std::uint64_t seed = derive_seed(derive_seed(7, std::string(to_string(s))), i);
      try {
        const ConstraintResult r = check_constraints(sample_scm(spec, prior, seed), spec, kSweepProbe, seed);
        if (!r.pass) ++failed;
        pmin = std::min(pmin, r.min_propensity);
        pmax = std::max(pmax, r.max_propensity);
      } catch (const PriorRejectionError&) {
        ++rejected;
      }
    }
    ok = ok && failed == 0 && rejected == 0 && pmin >= lo && pmax <= hi;
    detail << to_string(s) << " fail " << failed << " reject " << rejected << " p in [" << fmt(pmin, 3) << ", "
           << fmt(pmax, 3) << "]; ";
  }
  const double t = seconds(start);
  detail << fmt(t, 3) << "s";
  return {ok && t < 300.0, detail.str()};
}

Outcome consistency() {
  BnnPriorConfig prior;
  const Setting settings[] = {Setting::back_door, Setting::front_door, Setting::iv};
  std::size_t mismatches = 0, rows = 0;
  for (std::size_t k = 0; k < kConsistencyPairs; ++k) {
    const Setting s = settings[k % 3];
    Scm scm = k % 10 == 9 ? [&] {
      Rng rng(derive_seed(108, k));
      return to_scm(random_identified_scm(rng));
    }()
                          : sample_scm(SettingSpec::make(s), prior, derive_seed(106, k));
    const VarId a = *scm.roles().treatment, y = *scm.roles().outcome;
    const Table exo = draw_exogenous(scm, 4, derive_seed(107, k));
    const Table factual = evaluate(scm, exo);
    for (std::size_t i = 0; i < exo.rows; ++i) {
      Table one(1, exo.cols);
      std::copy(exo.row(i).begin(), exo.row(i).end(), one.row(0).begin());
      const Table cf = evaluate(scm.intervene(std::map<VarId, double>{{a, factual.at(i, a)}}), one);
      mismatches += cf.at(0, y) != factual.at(i, y);
      ++rows;
    }
  }
  return {mismatches == 0, std::to_string(kConsistencyPairs) + " (SCM, seed) pairs, " + std::to_string(rows) +
                               " rows, " + std::to_string(mismatches) + " mismatches"};
}

// ---- model -----------------------------------------------------------------

Dataset random_context(std::size_t n, std::size_t d_x, Rng& rng) {
  Dataset d(DatasetSchema::make(Setting::back_door, d_x, 0, TreatmentType::binary));
  std::vector<double> x(d_x);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = rng.normal();
    const double a = rng.uniform() < 0.5 ? 1.0 : 0.0;
    d.push_row(x, {}, a, x[0] - a + rng.normal());
  }
  return d;
}

Outcome mechanics() {
  const auto start = Clock::now();
  const ArchConfig arch;
  PfnModel model(arch, 109);
  Rng rng(110);
  // Simplex.
  const Dataset ctx = random_context(200, 5, rng);
  QuerySet q{5, {}};
  for (int i = 0; i < 50 * 5; ++i) q.x.push_back(rng.normal());
  const RowMatrix p = model.forward(ctx, q);
  double simplex = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    simplex = std::max({simplex, std::abs(p.row(i).sum() - 1.0), std::max(0.0, -p.row(i).minCoeff())});
  }
  // Permutation invariance.
  int exact = 0;
  for (int t = 0; t < kPermutationTrials; ++t) {
    std::vector<std::size_t> perm(ctx.n());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    exact += (model.forward(ctx.subset(perm), q).array() == p.array()).all();
  }
  // Gradient vs central differences, every parameter group.
  for (double& v : model.params()) v += 0.02 * rng.normal();
  const Dataset small = random_context(16, 3, rng);
  QuerySet sq{3, {}};
  for (int i = 0; i < 4 * 3; ++i) sq.x.push_back(rng.normal());
  const PreparedInput input = prepare_input(arch, small, sq);
  const std::vector<int> targets{0, 1, 2, 1};
  std::vector<double> grad(model.param_count(), 0.0);
  model.loss_gradient(input, targets, grad);
  const double h = 1e-5;
  struct GroupError {
    std::string name;
    double diff2 = 0.0, ref2 = 0.0;
    double count = 0.0;
  };
  std::vector<GroupError> groups;
  for (const auto& g : param_layout(arch)) {
    GroupError e{g.name};
    const std::size_t stride = std::max<std::size_t>(1, g.size / 4);
    for (std::size_t k = 0; k < g.size; k += stride) {
      const std::size_t idx = g.offset + k;
      const double saved = model.params()[idx];
      model.params()[idx] = saved + h;
      const double up = nll_loss(model.forward(input), targets).value;
      model.params()[idx] = saved - h;
      const double down = nll_loss(model.forward(input), targets).value;
      model.params()[idx] = saved;
      const double fd = (up - down) / (2.0 * h);
      e.diff2 += (fd - grad[idx]) * (fd - grad[idx]);
      e.ref2 += fd * fd;
      e.count += 1.0;
    }
    groups.push_back(e);
  }
  // Key biases shift every score of a query equally, so their gradient is
  // identically zero and the differences are pure rounding noise, about
  // eps |L| / h per entry. A group passes when its error is within the
  // tolerance relative to its norm or within 10x that noise.
  const double loss = nll_loss(model.forward(input), targets).value;
  const double noise = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(loss) / h;
  double worst = 0.0;
  std::string worst_group;
  for (const auto& e : groups) {
    const double rel = std::sqrt(e.diff2) / std::max(std::sqrt(e.ref2), std::sqrt(e.count) * noise / kGradRelTol);
    if (rel > worst) {
      worst = rel;
      worst_group = e.name;
    }
  }
  const double t = seconds(start);
  return {simplex <= kSimplexTol && exact == kPermutationTrials && worst < kGradRelTol && t < 120.0,
          "simplex err " + fmt(simplex) + ", bit-exact permutations " + std::to_string(exact) + "/" +
              std::to_string(kPermutationTrials) + ", max grad rel err " + fmt(worst) + " (" + worst_group + "), " +
              fmt(t, 3) + "s"};
}

// ---- desk-scale training ---------------------------------------------------

TrainConfig mini_config() {
  TrainConfig c;
  c.setting = Setting::back_door;
  c.arch.d_model = 64;
  c.arch.n_layers = 3;
  c.arch.n_heads = 4;
  c.arch.d_ff = 128;
  c.n_datasets = 500;
  c.sample_size = {64, 512};
  c.max_epochs = 40;
  c.patience = 8;
  c.seed = 11;
  return c;
}

struct Trained {
  std::shared_ptr<Checkpoint> checkpoint;
  double best_val = 0.0;
  std::size_t epochs = 0;
  double seconds = 0.0;
};

Trained& trained() {
  static Trained t = [] {
    const auto start = Clock::now();
    TrainResult r = train(mini_config());
    Trained out;
    out.best_val = r.checkpoint.metadata.at("final_val_loss").get<double>();
    out.epochs = r.log.size();
    out.checkpoint = std::make_shared<Checkpoint>(std::move(r.checkpoint));
    out.seconds = seconds(start);
    return out;
  }();
  return t;
}

Outcome desk_training() {
  const auto start = Clock::now();
  const Trained& t = trained();
  const double target = std::log(3.0) - kNllMargin;
  const PfnModel model = t.checkpoint->model();
  std::vector<double> pred, truth;
  std::vector<double> per_dataset_ratio;
  for (std::size_t d = 0; d < kEvalDatasets; ++d) {
    BenchmarkSpec spec;
    spec.id = "eval" + std::to_string(d);
    spec.kind = BenchmarkKind::prior;
    spec.seed = 9000 + d;
    spec.n = 2 * kEvalContext;
    spec.d_x = 2 + d % 5;
    spec.min_heterogeneity = 0.2;
    const BenchmarkData data = generate_benchmark_data(spec);
    std::vector<std::size_t> ctx(kEvalContext);
    std::iota(ctx.begin(), ctx.end(), std::size_t{0});
    QuerySet q{data.data.d_x(), {}};
    std::vector<double> tau;
    for (std::size_t i = kEvalContext; i < data.data.n(); ++i) {
      const auto x = data.data.x(i);
      q.x.insert(q.x.end(), x.begin(), x.end());
      tau.push_back(data.true_cate[i]);
    }
    const auto p = causalfm_predict(model, *t.checkpoint, data.data.subset(ctx), q);
    const std::vector<double> ate(tau.size(), mean(tau));
    per_dataset_ratio.push_back(pehe(p, tau).value / pehe(ate, tau).value);
    pred.insert(pred.end(), p.begin(), p.end());
    truth.insert(truth.end(), tau.begin(), tau.end());
  }
  // Best constant predictor of the pooled evaluation effects: their mean.
  const std::vector<double> best_constant(truth.size(), mean(truth));
  const double ratio = pehe(pred, truth).value / pehe(best_constant, truth).value;
  const double sign = sign_accuracy(pred, truth);
  const double minutes = (t.seconds + seconds(start)) / 60.0;
  std::sort(per_dataset_ratio.begin(), per_dataset_ratio.end());
  return {t.best_val < target && sign >= kSignAccuracy && ratio <= kPeheRatio && minutes <= 30.0,
          "val NLL " + fmt(t.best_val) + " (< " + fmt(target) + ", " + std::to_string(t.epochs) + " epochs), sign acc " +
              fmt(sign, 3) + ", PEHE / best-constant PEHE " + fmt(ratio, 3) + " (median per-dataset vs own ATE " +
              fmt(per_dataset_ratio[kEvalDatasets / 2], 3) + "), " + fmt(minutes, 3) + " min"};
}

Outcome context_scaling() {
  const Trained& t = trained();
  const PfnModel model = t.checkpoint->model();
  TrainConfig c = mini_config();
  c.sample_size = {512, 512};
  c.query_pool = c.n_queries;
  std::vector<double> diff(kScalingDatasets);
  double nll_small = 0.0, nll_large = 0.0;
  for (std::size_t i = 0; i < kScalingDatasets; ++i) {
    const TrainingExample ex = build_training_example(c, derive_seed(424242, i));
    std::vector<std::size_t> first(64);
    std::iota(first.begin(), first.end(), std::size_t{0});
    const double small = nll_loss(model.forward(ex.context.subset(first), ex.queries), ex.classes).value;
    const double large = nll_loss(model.forward(ex.context, ex.queries), ex.classes).value;
    nll_small += small;
    nll_large += large;
    diff[i] = small - large;
  }
  const double n = static_cast<double>(kScalingDatasets);
  const double tstat = mean(diff) / (sample_std(diff) / std::sqrt(n));
  return {tstat > kTCritical, "mean NLL n=512 " + fmt(nll_large / n) + " vs n=64 " + fmt(nll_small / n) +
                                  ", paired t " + fmt(tstat, 3) + " (> " + fmt(kTCritical) + ") over " +
                                  std::to_string(kScalingDatasets) + " datasets"};
}

// ---- benchmark harness -----------------------------------------------------

Outcome harness() {
  std::vector<BenchmarkSpec> suite;
  for (int k = 0; k < 3; ++k) {
    BenchmarkSpec s;
    s.id = "lin" + std::to_string(k);
    s.kind = BenchmarkKind::linear;
    s.seed = 300 + static_cast<std::uint64_t>(k);
    s.n = 500;
    s.d_x = 3 + static_cast<std::size_t>(k);
    s.tau.assign(s.d_x, 0.0);
    s.tau[0] = 1.0;
    s.tau[1] = -0.5;
    s.noise_sd = 0.0;
    suite.push_back(s);
  }
  BenchmarkSpec p;
  p.id = "prior";
  p.seed = 310;
  p.n = 400;
  std::vector<BenchmarkSpec> with_prior = suite;
  with_prior.push_back(p);
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const std::vector<Method> methods{builtin_method("oracle"), builtin_method("t_ridge"), builtin_method("s_knn"),
                                    causalfm_method(trained().checkpoint)};
  const BenchmarkResult r1 = run_benchmark(with_prior, methods, seeds);
  const BenchmarkResult r2 = run_benchmark(with_prior, methods, seeds, 2);
  const bool identical = r1.runs_csv() == r2.runs_csv() && r1.aggregate_csv() == r2.aggregate_csv();
  bool oracle_zero = true;
  double t_worst = 0.0;
  for (const auto& row : r1.rows) {
    if (row.method == "oracle") oracle_zero = oracle_zero && row.pehe_mean == 0.0 && row.pehe_std == 0.0;
    if (row.method == "t_ridge" && row.dataset_id != "prior") t_worst = std::max(t_worst, row.pehe_mean.value_or(1e9));
  }
  return {identical && oracle_zero && t_worst <= 1e-6,
          std::string("oracle 0 +- 0: ") + (oracle_zero ? "yes" : "no") + ", reruns byte-identical: " +
              (identical ? "yes" : "no") + ", T-learner noiseless linear PEHE " + fmt(t_worst)};
}

// ---- front-door ------------------------------------------------------------

Scm front_door_discrete() {
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
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
  b.add_mechanism("A", {x, u, ua}, {a}, fn([sig](auto p, auto o) {
                    o[0] = standard_normal_cdf(p[2]) < sig(-0.3 + 0.8 * p[0] + 1.2 * p[1]) ? 1.0 : 0.0;
                  }));
  b.add_mechanism("M", {x, a, um}, {m}, fn([sig](auto p, auto o) {
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

Outcome frontdoor() {
  // Hand-enumerated table: P(a=1) = .4, P(m=1|a) = .2/.7, E[Y|a,m] = 1,3 / 2,5 -> 1.2.
  Dataset toy(DatasetSchema::make(Setting::front_door, 1, 1, TreatmentType::binary));
  struct Cell {
    double a, m, y;
    int count;
  };
  for (const Cell& c : {Cell{0, 0, 1, 480}, Cell{0, 1, 3, 120}, Cell{1, 0, 2, 120}, Cell{1, 1, 5, 280}}) {
    for (int i = 0; i < c.count; ++i) {
      toy.push_row(std::vector<double>{0.0}, std::vector<double>{c.m}, c.a, c.y + (i % 2 ? 0.5 : -0.5));
    }
  }
  const double exact_err = std::abs(frontdoor_plugin(toy, QuerySet{1, {0.0}})[0] - 1.2);

  const Scm scm = front_door_discrete();
  const QuerySet strata{1, {0.0, 1.0}};
  const FrontdoorEstimate est = frontdoor_plugin_se(sample_observational(scm, kFrontdoorN, 111), strata, 100, 112);
  const CounterfactualSample cf = sample_counterfactual(scm, kFrontdoorN, 0.0, 1.0, 113);
  double worst_z = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> ite;
    for (std::size_t i = 0; i < cf.n(); ++i) {
      if (cf.x[i] == strata.x[k]) ite.push_back(cf.y1[i] - cf.y0[i]);
    }
    const double sim = mean(ite);
    const double sim_se = sample_std(ite) / std::sqrt(static_cast<double>(ite.size()));
    worst_z = std::max(worst_z, std::abs(est.cate[k] - sim) / std::hypot(est.se[k], sim_se));
  }
  return {exact_err <= 1e-10 && worst_z <= kSeMultiple,
          "enumerated error " + fmt(exact_err) + ", counterfactual oracle max |z| " + fmt(worst_z, 3) + " at n=1e5"};
}

}  // namespace

int main() {
  report(1, "equivalent_construction", equivalent_construction);
  report(2, "noiseless_construction", noiseless_construction);
  report(3, "identification", identification);
  report(4, "backdoor_bias", backdoor);
  report(5, "cdag_validator", cdag_validity);
  report(6, "non_identifiability_witness", posterior);
  report(7, "prior_constraint_sweep", constraint_sweep);
  report(8, "counterfactual_consistency", consistency);
  report(9, "model_mechanics", mechanics);
  report(10, "desk_scale_training", desk_training);
  report(11, "context_scaling", context_scaling);
  report(12, "benchmark_harness", harness);
  report(13, "frontdoor_plugin", frontdoor);
  std::printf("%s: %d of 13 criteria failed\n", failures ? "FAILED" : "PASSED", failures);
  return failures ? 1 : 0;
}
