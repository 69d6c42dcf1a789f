#include "causalfm/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
}

std::string_view to_string(VarKind kind) {
  switch (kind) {
    case VarKind::observed: return "observed";
    case VarKind::latent_noise: return "latent_noise";
    case VarKind::latent_confounder: return "latent_confounder";
  }
  return "?";
}

std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::normal: return "normal";
    case NoiseFamily::uniform: return "uniform";
    case NoiseFamily::laplace: return "laplace";
    case NoiseFamily::logistic: return "logistic";
  }
  return "?";
}

std::string_view to_string(Setting setting) {
  switch (setting) {
    case Setting::back_door: return "back_door";
    case Setting::front_door: return "front_door";
    case Setting::iv: return "iv";
    case Setting::custom: return "custom";
  }
  return "?";
}

std::string_view to_string(TreatmentType type) {
  return type == TreatmentType::binary ? "binary" : "continuous";
}

Setting parse_setting(std::string_view text) {
  if (text == "back_door") return Setting::back_door;
  if (text == "front_door") return Setting::front_door;
  if (text == "iv") return Setting::iv;
  if (text == "custom") return Setting::custom;
  throw InputError("unknown setting '" + std::string(text) + "'");
}

NoiseFamily parse_noise_family(std::string_view text) {
  if (text == "normal") return NoiseFamily::normal;
  if (text == "uniform") return NoiseFamily::uniform;
  if (text == "laplace") return NoiseFamily::laplace;
  if (text == "logistic") return NoiseFamily::logistic;
  throw InputError("unknown noise family '" + std::string(text) + "'");
}

TreatmentType parse_treatment_type(std::string_view text) {
  if (text == "binary") return TreatmentType::binary;
  if (text == "continuous") return TreatmentType::continuous;
  throw InputError("unknown treatment type '" + std::string(text) + "'");
}

double NoiseSpec::draw(Rng& rng) const {
  double standard = 0.0;
  switch (family) {
    case NoiseFamily::normal: standard = rng.normal(); break;
    case NoiseFamily::uniform: standard = rng.uniform(-1.0, 1.0); break;
    case NoiseFamily::laplace: standard = rng.laplace(); break;
    case NoiseFamily::logistic: standard = rng.logistic(); break;
  }
  return location + scale * standard;
}

double NoiseSpec::cdf(double value) const {
  const double z = (value - location) / scale;
  switch (family) {
    case NoiseFamily::normal: return standard_normal_cdf(z);
    case NoiseFamily::uniform: return std::clamp((z + 1.0) / 2.0, 0.0, 1.0);
    case NoiseFamily::laplace: return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
    case NoiseFamily::logistic: return sigmoid(z);
  }
  return 0.0;
}

bool Cluster::all_latent() const {
  return std::all_of(kinds.begin(), kinds.end(), is_latent);
}

bool Cluster::all_observed() const {
  return std::none_of(kinds.begin(), kinds.end(), is_latent);
}

bool Cluster::contains(std::string_view member) const {
  return std::find(members.begin(), members.end(), member) != members.end();
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void ConstantFunction::evaluate(std::span<const double>, std::span<double> outputs) const {
  std::copy_n(values_.begin(), std::min(values_.size(), outputs.size()), outputs.begin());
}

std::optional<LinearForm> ConstantFunction::linear_form(std::size_t n_parents,
                                                        std::size_t n_outputs) const {
  return LinearForm{std::vector<double>(n_parents * n_outputs, 0.0),
                    std::vector<double>(values_.begin(), values_.begin() + n_outputs)};
}

LinearFunction::LinearFunction(std::vector<double> weights, std::vector<double> bias)
    : form_{std::move(weights), std::move(bias)} {
  if (form_.bias.empty() || form_.weights.size() % form_.bias.size() != 0) {
    throw InvalidStructureError("linear function: weight count is not a multiple of output count");
  }
}

void LinearFunction::evaluate(std::span<const double> parents, std::span<double> outputs) const {
  const std::size_t n_parents = form_.weights.size() / form_.bias.size();
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    double acc = form_.bias[k];
    for (std::size_t j = 0; j < n_parents; ++j) acc += form_.weights[k * n_parents + j] * parents[j];
    outputs[k] = acc;
  }
}

std::optional<LinearForm> LinearFunction::linear_form(std::size_t, std::size_t) const {
  return form_;
}

BernoulliGate::BernoulliGate(FunctionPtr score, std::size_t n_score_parents, double epsilon,
                             Calibration calibration)
    : score_(std::move(score)),
      n_score_parents_(n_score_parents),
      epsilon_(epsilon),
      calibration_(calibration) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw InvalidStructureError("gate epsilon must lie in [0, 0.5)");
  }
  if (!(calibration_.stddev > 0.0)) calibration_.stddev = 1.0;
}

double BernoulliGate::raw_score(std::span<const double> score_parents) const {
  double value = 0.0;
  score_->evaluate(score_parents.first(n_score_parents_), std::span<double>(&value, 1));
  return value;
}

double BernoulliGate::propensity(std::span<const double> score_parents) const {
  const double z = (raw_score(score_parents) - calibration_.mean) / calibration_.stddev;
  return std::clamp(sigmoid(z), epsilon_, 1.0 - epsilon_);
}

void BernoulliGate::evaluate(std::span<const double> parents, std::span<double> outputs) const {
  const double p = propensity(parents);
  const double u = standard_normal_cdf(parents[n_score_parents_]);
  outputs[0] = u < p ? 1.0 : 0.0;
}

AdditiveFunction::AdditiveFunction(FunctionPtr f, std::vector<std::size_t> f_parents, FunctionPtr g,
                                   std::vector<std::size_t> g_parents)
    : f_(std::move(f)),
      f_parents_(std::move(f_parents)),
      g_(std::move(g)),
      g_parents_(std::move(g_parents)) {}

void AdditiveFunction::evaluate(std::span<const double> parents, std::span<double> outputs) const {
  // Small fixed-size scratch; additive outcomes are scalar.
  std::vector<double> buffer(std::max(f_parents_.size(), g_parents_.size()));
  double f_value = 0.0;
  double g_value = 0.0;
  for (std::size_t i = 0; i < f_parents_.size(); ++i) buffer[i] = parents[f_parents_[i]];
  f_->evaluate(std::span<const double>(buffer.data(), f_parents_.size()),
               std::span<double>(&f_value, 1));
  for (std::size_t i = 0; i < g_parents_.size(); ++i) buffer[i] = parents[g_parents_[i]];
  g_->evaluate(std::span<const double>(buffer.data(), g_parents_.size()),
               std::span<double>(&g_value, 1));
  outputs[0] = f_value + g_value;
}

// ---------------------------------------------------------------------------
// Scm

std::size_t Scm::latent_column(VarId id) const {
  const std::size_t column = latent_column_.at(id);
  if (column == kNone) throw InputError("variable '" + variables_[id].name + "' is not latent");
  return column;
}

VarId Scm::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw InputError("unknown variable '" + std::string(name) + "'");
}

std::optional<VarId> Scm::find(std::string_view name) const {
  for (VarId i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Scm::producer(VarId id) const {
  const std::size_t index = producer_.at(id);
  if (index == kNone) throw InputError("variable '" + variables_[id].name + "' has no mechanism");
  return index;
}

Scm Scm::intervene(const std::map<VarId, double>& assignments) const {
  Scm copy = *this;
  for (const auto& [id, value] : assignments) {
    if (id >= variables_.size()) throw InvalidInterventionError("intervention on unknown variable");
    if (is_latent(variables_[id].kind)) {
      throw InvalidInterventionError("cannot intervene on latent variable '" +
                                     variables_[id].name + "'");
    }
    if (!std::isfinite(value)) {
      throw InvalidInterventionError("intervention value for '" + variables_[id].name +
                                     "' is not finite");
    }
    copy.interventions_[id] = value;
  }
  return copy;
}

Scm Scm::intervene(const std::map<std::string, double>& assignments) const {
  std::map<VarId, double> by_id;
  for (const auto& [name, value] : assignments) {
    auto found = find(name);
    if (!found) throw InvalidInterventionError("intervention on unknown variable '" + name + "'");
    by_id[*found] = value;
  }
  return intervene(by_id);
}

Scm Scm::clear_interventions() const {
  Scm copy = *this;
  copy.interventions_.clear();
  return copy;
}

std::vector<VarId> Scm::ancestors(VarId id) const {
  std::vector<bool> seen(variables_.size(), false);
  std::vector<VarId> stack{id};
  while (!stack.empty()) {
    const VarId current = stack.back();
    stack.pop_back();
    if (producer_[current] == kNone) continue;
    for (VarId parent : mechanisms_[producer_[current]].parents) {
      if (!seen[parent]) {
        seen[parent] = true;
        stack.push_back(parent);
      }
    }
  }
  std::vector<VarId> result;
  for (VarId v = 0; v < seen.size(); ++v) {
    if (seen[v] && v != id) result.push_back(v);
  }
  return result;
}

std::vector<std::pair<std::string, std::string>> Scm::cluster_edges() const {
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& mechanism : mechanisms_) {
    for (VarId parent : mechanism.parents) {
      const std::string& from = variables_[parent].cluster;
      if (from != mechanism.cluster) edges.emplace(from, mechanism.cluster);
    }
  }
  return {edges.begin(), edges.end()};
}

// ---------------------------------------------------------------------------
// Builder

VarId Scm::Builder::add_latent(std::string name, VarKind kind, NoiseSpec spec, std::string cluster) {
  if (!is_latent(kind)) throw InvalidStructureError("add_latent requires a latent kind");
  if (!(spec.scale > 0.0) || !std::isfinite(spec.location)) {
    throw InvalidStructureError("noise spec for '" + name + "' needs finite location and scale > 0");
  }
  const VarId id = variables_.size();
  variables_.push_back({std::move(name), kind, cluster});
  noise_specs_[id] = spec;
  if (std::find(cluster_order_.begin(), cluster_order_.end(), cluster) == cluster_order_.end()) {
    cluster_order_.push_back(std::move(cluster));
  }
  return id;
}

VarId Scm::Builder::add_observed(std::string name, std::string cluster) {
  const VarId id = variables_.size();
  variables_.push_back({std::move(name), VarKind::observed, cluster});
  if (std::find(cluster_order_.begin(), cluster_order_.end(), cluster) == cluster_order_.end()) {
    cluster_order_.push_back(std::move(cluster));
  }
  return id;
}

void Scm::Builder::add_mechanism(std::string cluster, std::vector<VarId> parents,
                                 std::vector<VarId> outputs, FunctionPtr fn) {
  mechanisms_.push_back({std::move(cluster), std::move(parents), std::move(outputs), std::move(fn)});
}

VarId Scm::Builder::id(std::string_view name) const {
  for (VarId i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  throw InputError("unknown variable '" + std::string(name) + "'");
}

Scm Scm::Builder::build() && {
  Scm scm;
  const std::size_t n = variables_.size();

  {
    std::set<std::string> names;
    for (const auto& v : variables_) {
      if (!names.insert(v.name).second) {
        throw InvalidStructureError("duplicate variable name '" + v.name + "'");
      }
    }
  }

  // Mechanism bookkeeping: each observed variable produced exactly once, by a
  // mechanism of its own cluster; latents are never produced.
  std::vector<std::size_t> producer(n, kNone);
  std::set<std::string> clusters_with_mechanism;
  for (std::size_t m = 0; m < mechanisms_.size(); ++m) {
    const auto& mech = mechanisms_[m];
    if (!mech.fn) throw InvalidStructureError("mechanism for cluster '" + mech.cluster + "' has no function");
    if (!clusters_with_mechanism.insert(mech.cluster).second) {
      throw InvalidStructureError("cluster '" + mech.cluster + "' has more than one mechanism");
    }
    for (VarId parent : mech.parents) {
      if (parent >= n) throw InvalidStructureError("mechanism parent out of range");
    }
    for (VarId out : mech.outputs) {
      if (out >= n) throw InvalidStructureError("mechanism output out of range");
      if (is_latent(variables_[out].kind)) {
        throw InvalidStructureError("latent variable '" + variables_[out].name +
                                    "' cannot be a mechanism output");
      }
      if (variables_[out].cluster != mech.cluster) {
        throw InvalidStructureError("variable '" + variables_[out].name +
                                    "' is produced outside its cluster");
      }
      if (producer[out] != kNone) {
        throw InvalidStructureError("variable '" + variables_[out].name + "' has two mechanisms");
      }
      producer[out] = m;
    }
  }
  for (VarId v = 0; v < n; ++v) {
    if (variables_[v].kind == VarKind::observed && producer[v] == kNone) {
      throw InvalidStructureError("observed variable '" + variables_[v].name + "' has no mechanism");
    }
  }

  // Clusters in insertion order.
  std::vector<Cluster> clusters;
  std::map<std::string, std::size_t> cluster_index;
  for (const auto& id : cluster_order_) {
    cluster_index[id] = clusters.size();
    clusters.push_back({id, {}, {}});
  }
  for (const auto& v : variables_) {
    auto& c = clusters[cluster_index.at(v.cluster)];
    c.members.push_back(v.name);
    c.kinds.push_back(v.kind);
  }

  // Confounders need observed children in at least two distinct clusters.
  for (VarId v = 0; v < n; ++v) {
    if (variables_[v].kind != VarKind::latent_confounder) continue;
    std::set<std::string> child_clusters;
    for (const auto& mech : mechanisms_) {
      if (std::find(mech.parents.begin(), mech.parents.end(), v) != mech.parents.end()) {
        child_clusters.insert(mech.cluster);
      }
    }
    if (child_clusters.size() < 2) {
      throw InvalidStructureError("latent confounder '" + variables_[v].name +
                                  "' needs observed children in two distinct clusters");
    }
  }

  // Topological order of clusters (Kahn, ties by insertion order).
  const std::size_t k = clusters.size();
  std::vector<std::set<std::size_t>> out_edges(k);
  std::vector<std::size_t> in_degree(k, 0);
  for (const auto& mech : mechanisms_) {
    const std::size_t to = cluster_index.at(mech.cluster);
    for (VarId parent : mech.parents) {
      const std::size_t from = cluster_index.at(variables_[parent].cluster);
      if (from != to && out_edges[from].insert(to).second) ++in_degree[to];
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> placed(k, false);
  while (order.size() < k) {
    bool progressed = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (placed[c] || in_degree[c] != 0) continue;
      placed[c] = true;
      order.push_back(c);
      for (std::size_t to : out_edges[c]) --in_degree[to];
      progressed = true;
      break;
    }
    if (!progressed) throw InvalidStructureError("cluster graph contains a cycle");
  }

  // Within a cluster, a mechanism may only read intra-cluster latents, not
  // intra-cluster observed variables (one function per cluster).
  for (const auto& mech : mechanisms_) {
    for (VarId parent : mech.parents) {
      if (variables_[parent].cluster == mech.cluster && !is_latent(variables_[parent].kind)) {
        throw InvalidStructureError("mechanism of cluster '" + mech.cluster +
                                    "' reads its own output '" + variables_[parent].name + "'");
      }
    }
  }

  for (std::size_t c : order) scm.clusters_.push_back(clusters[c]);
  std::vector<std::size_t> mechanism_of_cluster(k, kNone);
  for (std::size_t m = 0; m < mechanisms_.size(); ++m) {
    mechanism_of_cluster[cluster_index.at(mechanisms_[m].cluster)] = m;
  }
  std::vector<std::size_t> new_index(mechanisms_.size(), kNone);
  for (std::size_t c : order) {
    const std::size_t m = mechanism_of_cluster[c];
    if (m == kNone) continue;
    new_index[m] = scm.mechanisms_.size();
    scm.mechanisms_.push_back(mechanisms_[m]);
  }

  scm.variables_ = variables_;
  scm.noise_specs_ = noise_specs_;
  scm.producer_.assign(n, kNone);
  for (VarId v = 0; v < n; ++v) {
    if (producer[v] != kNone) scm.producer_[v] = new_index[producer[v]];
  }
  scm.latent_column_.assign(n, kNone);
  for (VarId v = 0; v < n; ++v) {
    if (is_latent(variables_[v].kind)) {
      scm.latent_column_[v] = scm.latents_.size();
      scm.latents_.push_back(v);
    }
  }

  // Roles must reference observed variables.
  auto check_role = [&](VarId v, const char* role) {
    if (v >= n || is_latent(variables_[v].kind)) {
      throw InvalidStructureError(std::string(role) + " role must reference an observed variable");
    }
  };
  for (VarId v : roles_.covariates) check_role(v, "covariate");
  for (VarId v : roles_.aux) check_role(v, "aux");
  if (roles_.treatment) check_role(*roles_.treatment, "treatment");
  if (roles_.outcome) check_role(*roles_.outcome, "outcome");
  scm.roles_ = roles_;
  return scm;
}

}  // namespace causalfm
