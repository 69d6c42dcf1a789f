#include "causalfm/prior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

// Column-wise simulation of the partially built SCM on calibration rows.
class Calibration {
 public:
  Calibration(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed, 0, 1) {}

  void latent(const std::string& name, const NoiseSpec& spec) {
    auto& col = columns_[name];
    col.resize(n_);
    for (double& v : col) v = spec.draw(rng_);
  }

  void apply(const StructuralFunction& fn, const std::vector<std::string>& parents,
             const std::vector<std::string>& outputs) {
    std::vector<double> in(parents.size());
    std::vector<double> out(outputs.size());
    for (const auto& name : outputs) columns_[name].resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t p = 0; p < parents.size(); ++p) in[p] = columns_.at(parents[p])[i];
      fn.evaluate(in, out);
      for (std::size_t k = 0; k < outputs.size(); ++k) columns_[outputs[k]][i] = out[k];
    }
  }

  std::vector<double> scores(const StructuralFunction& fn, const std::vector<std::string>& parents) {
    apply(fn, parents, {"__score"});
    return columns_.at("__score");
  }

  const std::vector<double>& column(const std::string& name) const { return columns_.at(name); }
  std::size_t n() const { return n_; }

 private:
  std::size_t n_;
  Rng rng_;
  std::map<std::string, std::vector<double>> columns_;
};

BernoulliGate::Calibration moments(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  return {mean, sd > 1e-12 ? sd : 1.0};
}

double empirical_quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

NoiseFamily draw_family(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (u < weights[k]) return static_cast<NoiseFamily>(k);
    u -= weights[k];
  }
  return NoiseFamily::normal;
}

std::vector<std::string> names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Partial OLS slope of `a` on `z` controlling for the covariate columns.
struct SlopeFit {
  double slope = 0.0;
  double t = 0.0;
};

// OLS coefficient of a on z adjusting for covariates, with its t statistic.
SlopeFit partial_slope(const Calibration& cal, const std::vector<std::string>& covariates,
                       const std::string& z, const std::string& a) {
  const std::size_t n = cal.n();
  Eigen::MatrixXd design(n, covariates.size() + 2);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < covariates.size(); ++j) design(i, j + 1) = cal.column(covariates[j])[i];
    design(i, covariates.size() + 1) = cal.column(z)[i];
    target(i) = cal.column(a)[i];
  }
  const auto cod = design.completeOrthogonalDecomposition();
  const Eigen::VectorXd coef = cod.solve(target);
  const Eigen::VectorXd resid = target - design * coef;
  const double dof = static_cast<double>(n) - static_cast<double>(design.cols());
  const double sigma2 = resid.squaredNorm() / std::max(dof, 1.0);
  // Variance factor of the last coefficient: 1 / ||z residualized on the other columns||^2.
  const Eigen::MatrixXd others = design.leftCols(design.cols() - 1);
  const Eigen::VectorXd zc = design.col(design.cols() - 1);
  const Eigen::VectorXd rz = zc - others * others.completeOrthogonalDecomposition().solve(zc);
  const double ss = rz.squaredNorm();
  SlopeFit fit;
  fit.slope = coef(coef.size() - 1);
  fit.t = ss > 0.0 && sigma2 > 0.0 ? fit.slope / std::sqrt(sigma2 / ss) : 0.0;
  return fit;
}

double stddev(const std::vector<double>& v) { return moments(v).stddev; }

class ScmAssembler {
 public:
  ScmAssembler(const BnnPriorConfig& config, std::uint64_t seed)
      : config_(config),
        rng_(derive_seed(seed, "structure")),
        cal_(kCalibrationRows, derive_seed(seed, "calibration")) {}

  void latent(const std::string& name, VarKind kind, NoiseSpec spec, const std::string& cluster) {
    builder_.add_latent(name, kind, spec, cluster);
    cal_.latent(name, spec);
  }

  void mechanism(const std::string& cluster, const std::vector<std::string>& parents,
                 const std::vector<std::string>& outputs, FunctionPtr fn) {
    std::vector<VarId> parent_ids, output_ids;
    for (const auto& p : parents) parent_ids.push_back(builder_.id(p));
    for (const auto& o : outputs) output_ids.push_back(builder_.add_observed(o, cluster));
    cal_.apply(*fn, parents, outputs);
    builder_.add_mechanism(cluster, parent_ids, output_ids, std::move(fn));
  }

  // Covariate cluster: root noises of mixed families feeding a clustered BNN;
  // a random subset of its outputs is discretized at calibration quantiles.
  std::vector<std::string> covariates() {
    const auto d_x = static_cast<std::size_t>(rng_.uniform_int(config_.d_x.first, config_.d_x.second));
    const auto n_roots = static_cast<std::size_t>(
        rng_.uniform_int(config_.covariate_roots.first, config_.covariate_roots.second));
    const auto roots = names("U_X", n_roots);
    for (const auto& r : roots) {
      latent(r, VarKind::latent_noise, {draw_family(config_.noise_family_weights, rng_), 0.0, 1.0}, "XU");
    }
    auto bnn = sample_clustered_bnn(config_, n_roots, d_x, rng_);
    const auto raw = names("__raw_X", d_x);
    cal_.apply(*bnn, roots, raw);
    std::vector<std::vector<double>> thresholds(d_x);
    for (std::size_t j = 0; j < d_x; ++j) {
      if (rng_.uniform() >= config_.discretize_fraction) continue;
      const auto levels = rng_.uniform_int(1, 3);
      for (std::int64_t t = 0; t < levels; ++t) {
        thresholds[j].push_back(empirical_quantile(cal_.column(raw[j]), rng_.uniform(0.2, 0.8)));
      }
    }
    const auto xs = names("X", d_x);
    mechanism("XU", roots, xs, std::make_shared<DiscretizedFunction>(bnn, d_x, std::move(thresholds)));
    return xs;
  }

  // Binary node through a clipped, calibrated propensity gate.
  void gate(const std::string& cluster, const std::string& out, const std::vector<std::string>& score_parents,
            const std::string& noise_name) {
    latent(noise_name, VarKind::latent_noise, {}, "U_" + out);
    auto score = sample_bnn_graph(config_, score_parents.size(), 1, rng_);
    const auto calibration = moments(cal_.scores(*score, score_parents));
    auto fn = std::make_shared<BernoulliGate>(score, score_parents.size(), config_.positivity_epsilon,
                                              calibration);
    mechanism(cluster, concat(score_parents, {noise_name}), {out}, std::move(fn));
  }

  FunctionPtr bnn(std::size_t n_in) { return sample_bnn_graph(config_, n_in, 1, rng_); }

  Rng& rng() { return rng_; }
  Calibration& calibration() { return cal_; }
  Scm::Builder& builder() { return builder_; }
  const BnnPriorConfig& config() const { return config_; }

 private:
  const BnnPriorConfig& config_;
  Rng rng_;
  Calibration cal_;
  Scm::Builder builder_;
};

void finish_roles(Scm::Builder& b, Setting setting, const std::vector<std::string>& xs,
                  std::vector<std::string> aux, TreatmentType type) {
  auto& roles = b.roles();
  roles.setting = setting;
  for (const auto& x : xs) roles.covariates.push_back(b.id(x));
  for (const auto& m : aux) roles.aux.push_back(b.id(m));
  roles.treatment = b.id("A");
  roles.outcome = b.id("Y");
  roles.treatment_type = type;
}

Scm backdoor_scm(const BnnPriorConfig& config, std::uint64_t seed) {
  ScmAssembler s(config, seed);
  const auto xs = s.covariates();
  s.gate("A", "A", xs, "U_A");
  s.latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  s.mechanism("Y", concat(xs, {"A", "U_Y"}), {"Y"}, s.bnn(xs.size() + 2));
  finish_roles(s.builder(), Setting::back_door, xs, {}, TreatmentType::binary);
  return std::move(s.builder()).build();
}

Scm frontdoor_scm(const BnnPriorConfig& config, std::uint64_t seed) {
  ScmAssembler s(config, seed);
  const auto xs = s.covariates();
  s.latent("U", VarKind::latent_confounder, {}, "U");
  s.gate("A", "A", concat(xs, {"U"}), "U_A");
  s.gate("M", "M", concat(xs, {"A"}), "U_M");
  s.latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  s.mechanism("Y", concat(xs, {"M", "U", "U_Y"}), {"Y"}, s.bnn(xs.size() + 3));
  finish_roles(s.builder(), Setting::front_door, xs, {"M"}, TreatmentType::binary);
  return std::move(s.builder()).build();
}

Scm iv_scm(const BnnPriorConfig& config, std::uint64_t seed) {
  ScmAssembler s(config, seed);
  const auto xs = s.covariates();
  s.gate("Z", "Z", xs, "U_Z");
  s.latent("U", VarKind::latent_confounder, {}, "U");
  s.latent("U_A", VarKind::latent_noise, {}, "U_A");

  // Redraw the treatment mechanism until the instrument is relevant.
  const auto a_parents = concat(xs, {"Z", "U", "U_A"});
  FunctionPtr a_fn;
  double best = -1.0;
  for (int attempt = 0; attempt < kPriorRetryBudget; ++attempt) {
    auto candidate = s.bnn(a_parents.size());
    s.calibration().apply(*candidate, a_parents, {"__A"});
    const double sd = stddev(s.calibration().column("__A"));
    const SlopeFit fit = partial_slope(s.calibration(), xs, "Z", "__A");
    const double slope = std::abs(fit.slope);
    best = std::max(best, slope / sd);
    // The t floor guards against selecting on calibration noise.
    if (slope >= kRelevanceFloor * sd && std::abs(fit.t) >= kRelevanceMinT) {
      a_fn = candidate;
      break;
    }
  }
  if (!a_fn) {
    std::ostringstream msg;
    msg << "iv prior: no relevant instrument after " << kPriorRetryBudget
        << " draws (best partial slope " << best << " sd(A))";
    throw PriorRejectionError(msg.str());
  }
  s.mechanism("A", a_parents, {"A"}, a_fn);

  // Y = f(X, A) + g(X, U, U_Y)
  s.latent("U_Y", VarKind::latent_noise, {}, "U_Y");
  const std::size_t d = xs.size();
  std::vector<std::size_t> f_idx, g_idx;
  for (std::size_t j = 0; j < d; ++j) {
    f_idx.push_back(j);
    g_idx.push_back(j);
  }
  f_idx.push_back(d);      // A
  g_idx.push_back(d + 1);  // U
  g_idx.push_back(d + 2);  // U_Y
  auto f = s.bnn(d + 1);
  auto g = s.bnn(d + 2);
  s.mechanism("Y", concat(xs, {"A", "U", "U_Y"}), {"Y"},
              std::make_shared<AdditiveFunction>(f, f_idx, g, g_idx));
  finish_roles(s.builder(), Setting::iv, xs, {"Z"}, TreatmentType::continuous);
  return std::move(s.builder()).build();
}

std::string range_text(std::pair<int, int> r) {
  return std::to_string(r.first) + ", " + std::to_string(r.second);
}

std::string number_text(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::treatment_positivity: return "positivity";
    case ConstraintKind::mediator_positivity: return "mediator_positivity";
    case ConstraintKind::instrument_positivity: return "instrument_positivity";
    case ConstraintKind::instrument_relevance: return "relevance";
    case ConstraintKind::additive_outcome: return "additivity";
  }
  return "unknown";
}

SettingSpec SettingSpec::make(Setting kind) {
  switch (kind) {
    case Setting::back_door:
      return {kind, backdoor_cdag(), {ConstraintKind::treatment_positivity}};
    case Setting::front_door:
      return {kind, frontdoor_cdag(),
              {ConstraintKind::treatment_positivity, ConstraintKind::mediator_positivity}};
    case Setting::iv:
      return {kind, iv_cdag(),
              {ConstraintKind::instrument_positivity, ConstraintKind::instrument_relevance,
               ConstraintKind::additive_outcome}};
    case Setting::custom: break;
  }
  throw PreconditionError("no prior is defined for the custom setting");
}

Scm sample_scm(const SettingSpec& setting, const BnnPriorConfig& config, std::uint64_t seed) {
  config.validate();
  switch (setting.kind) {
    case Setting::back_door: return backdoor_scm(config, seed);
    case Setting::front_door: return frontdoor_scm(config, seed);
    case Setting::iv: return iv_scm(config, seed);
    case Setting::custom: break;
  }
  throw PreconditionError("no prior is defined for the custom setting");
}

TreatmentAssignment assign_treatment(std::span<const double> raw_scores, double epsilon,
                                     std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw PreconditionError("epsilon must lie in (0, 0.5)");
  TreatmentAssignment out;
  const std::size_t n = raw_scores.size();
  if (n == 0) return out;
  for (double s : raw_scores) {
    if (!std::isfinite(s) && !std::isinf(s)) throw InputError("assign_treatment: NaN score");
  }
  // Infinite scores saturate; moments are taken over the finite ones.
  std::vector<double> finite;
  for (double s : raw_scores) {
    if (std::isfinite(s)) finite.push_back(s);
  }
  const auto m = finite.empty() ? BernoulliGate::Calibration{} : moments(finite);
  out.propensity.resize(n);
  out.treatment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = std::isfinite(raw_scores[i]) ? (raw_scores[i] - m.mean) / m.stddev : raw_scores[i];
    out.propensity[i] = std::clamp(sigmoid(z), epsilon, 1.0 - epsilon);
    Rng rng(seed, i);
    out.treatment[i] = rng.uniform() < out.propensity[i] ? 1.0 : 0.0;
  }
  return out;
}

BnnPriorConfig prior_config_from(const KvConfig& c) {
  BnnPriorConfig p;
  auto int_range = [&](const char* key, std::pair<int, int>& field) {
    if (!c.has(key)) return;
    const auto r = c.get_int_range(key);
    field = {static_cast<int>(r.first), static_cast<int>(r.second)};
  };
  int_range("hidden_layers", p.hidden_layers);
  int_range("width", p.width);
  int_range("d_x", p.d_x);
  int_range("covariate_roots", p.covariate_roots);
  p.weight_scale = c.double_or("weight_scale", p.weight_scale);
  p.edge_drop_prob = c.double_or("edge_drop_prob", p.edge_drop_prob);
  if (c.has("noise_family_weights")) p.noise_family_weights = c.get_doubles("noise_family_weights");
  p.discretize_fraction = c.double_or("discretize_fraction", p.discretize_fraction);
  p.positivity_epsilon = c.double_or("positivity_epsilon", p.positivity_epsilon);
  p.validate();
  return p;
}

void write_prior_config(const BnnPriorConfig& p, KvConfig& out) {
  out.set("hidden_layers", range_text(p.hidden_layers));
  out.set("width", range_text(p.width));
  out.set("d_x", range_text(p.d_x));
  out.set("covariate_roots", range_text(p.covariate_roots));
  out.set("weight_scale", number_text(p.weight_scale));
  out.set("edge_drop_prob", number_text(p.edge_drop_prob));
  std::string weights;
  for (std::size_t k = 0; k < p.noise_family_weights.size(); ++k) {
    weights += (k ? ", " : "") + number_text(p.noise_family_weights[k]);
  }
  out.set("noise_family_weights", weights);
  out.set("discretize_fraction", number_text(p.discretize_fraction));
  out.set("positivity_epsilon", number_text(p.positivity_epsilon));
}

}  // namespace causalfm
