#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causalfm/rng.hpp"

namespace causalfm {

using VarId = std::size_t;

enum class VarKind { observed, latent_noise, latent_confounder };
enum class NoiseFamily { normal, uniform, laplace, logistic };
enum class Setting { back_door, front_door, iv, custom };
enum class TreatmentType { binary, continuous };

std::string_view to_string(VarKind kind);
std::string_view to_string(NoiseFamily family);
std::string_view to_string(Setting setting);
std::string_view to_string(TreatmentType type);
Setting parse_setting(std::string_view text);
NoiseFamily parse_noise_family(std::string_view text);
TreatmentType parse_treatment_type(std::string_view text);

inline bool is_latent(VarKind kind) { return kind != VarKind::observed; }

// Distribution of one exogenous variable: location + scale * standard draw.
// Standard draws: N(0,1), U(-1,1), Laplace(0,1), Logistic(0,1).
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::normal;
  double location = 0.0;
  double scale = 1.0;

  double draw(Rng& rng) const;
  double cdf(double value) const;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::observed;
  std::string cluster;
};

struct Cluster {
  std::string id;
  std::vector<std::string> members;
  std::vector<VarKind> kinds;

  bool all_latent() const;
  bool all_observed() const;
  bool contains(std::string_view member) const;
  bool operator==(const Cluster&) const = default;
};

// outputs[k] = bias[k] + sum_j weights[k * n_parents + j] * parents[j]
struct LinearForm {
  std::vector<double> weights;
  std::vector<double> bias;
};

class BernoulliGate;
class AdditiveFunction;

// A deterministic map from the values of a mechanism's parents to the values
// of its outputs. Implementations must be immutable and thread-safe.
class StructuralFunction {
 public:
  virtual ~StructuralFunction() = default;
  virtual void evaluate(std::span<const double> parents, std::span<double> outputs) const = 0;

  // Exact affine form, when the function has one.
  virtual std::optional<LinearForm> linear_form(std::size_t /*n_parents*/,
                                                std::size_t /*n_outputs*/) const {
    return std::nullopt;
  }
  virtual const BernoulliGate* as_gate() const { return nullptr; }
  virtual const AdditiveFunction* as_additive() const { return nullptr; }
};

using FunctionPtr = std::shared_ptr<const StructuralFunction>;

class ConstantFunction final : public StructuralFunction {
 public:
  explicit ConstantFunction(std::vector<double> values) : values_(std::move(values)) {}
  void evaluate(std::span<const double> parents, std::span<double> outputs) const override;
  std::optional<LinearForm> linear_form(std::size_t n_parents, std::size_t n_outputs) const override;

 private:
  std::vector<double> values_;
};

class LinearFunction final : public StructuralFunction {
 public:
  LinearFunction(std::vector<double> weights, std::vector<double> bias);
  void evaluate(std::span<const double> parents, std::span<double> outputs) const override;
  std::optional<LinearForm> linear_form(std::size_t n_parents, std::size_t n_outputs) const override;

 private:
  LinearForm form_;
};

class LambdaFunction final : public StructuralFunction {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  explicit LambdaFunction(Fn fn) : fn_(std::move(fn)) {}
  void evaluate(std::span<const double> parents, std::span<double> outputs) const override {
    fn_(parents, outputs);
  }

 private:
  Fn fn_;
};

// Binary assignment through a clipped propensity score:
//   p = clip(sigmoid((score(parents[0..k)) - mean) / std), eps, 1 - eps)
//   out = 1{Phi(parents[k]) < p}
// where parents[k] (the last parent) is a standard-normal gate noise.
struct GateCalibration {
  double mean = 0.0;
  double stddev = 1.0;
};

class BernoulliGate final : public StructuralFunction {
 public:
  using Calibration = GateCalibration;

  BernoulliGate(FunctionPtr score, std::size_t n_score_parents, double epsilon,
                Calibration calibration = {});

  void evaluate(std::span<const double> parents, std::span<double> outputs) const override;
  const BernoulliGate* as_gate() const override { return this; }

  double raw_score(std::span<const double> score_parents) const;
  double propensity(std::span<const double> score_parents) const;
  std::size_t n_score_parents() const { return n_score_parents_; }
  double epsilon() const { return epsilon_; }
  const Calibration& calibration() const { return calibration_; }
  const FunctionPtr& score() const { return score_; }

 private:
  FunctionPtr score_;
  std::size_t n_score_parents_;
  double epsilon_;
  Calibration calibration_;
};

// out = f(parents[f_index]) + g(parents[g_index]). Used for outcomes that
// must separate the treatment path from the latent path.
class AdditiveFunction final : public StructuralFunction {
 public:
  AdditiveFunction(FunctionPtr f, std::vector<std::size_t> f_parents, FunctionPtr g,
                   std::vector<std::size_t> g_parents);
  void evaluate(std::span<const double> parents, std::span<double> outputs) const override;
  const AdditiveFunction* as_additive() const override { return this; }

  const std::vector<std::size_t>& f_parents() const { return f_parents_; }
  const std::vector<std::size_t>& g_parents() const { return g_parents_; }

 private:
  FunctionPtr f_;
  std::vector<std::size_t> f_parents_;
  FunctionPtr g_;
  std::vector<std::size_t> g_parents_;
};

double sigmoid(double z);
double standard_normal_cdf(double z);

// One structural assignment: outputs := fn(parents). Every observed variable
// is the output of exactly one mechanism; each cluster has at most one.
struct Mechanism {
  std::string cluster;
  std::vector<VarId> parents;
  std::vector<VarId> outputs;
  FunctionPtr fn;
};

// Which variables play which causal role in the generated data.
struct ScmRoles {
  Setting setting = Setting::custom;
  std::vector<VarId> covariates;
  std::vector<VarId> aux;  // mediator (front-door) or instrument (IV)
  std::optional<VarId> treatment;
  std::optional<VarId> outcome;
  TreatmentType treatment_type = TreatmentType::binary;
};

// Executable structural causal model. Immutable after construction; the
// evaluation order (topological over clusters, ties broken by insertion
// order) is fixed by the builder.
class Scm {
 public:
  class Builder;

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<Mechanism>& mechanisms() const { return mechanisms_; }
  const std::map<VarId, double>& interventions() const { return interventions_; }
  const std::map<VarId, NoiseSpec>& noise_specs() const { return noise_specs_; }
  const ScmRoles& roles() const { return roles_; }

  // Latent variables in the column order of a NoiseTable.
  const std::vector<VarId>& latents() const { return latents_; }
  std::size_t latent_column(VarId id) const;

  std::size_t size() const { return variables_.size(); }
  VarId id(std::string_view name) const;
  std::optional<VarId> find(std::string_view name) const;
  const Variable& variable(VarId id) const { return variables_.at(id); }

  // Returns a copy whose listed observed variables are held at constants.
  // Assignments merge with (and override) existing interventions.
  Scm intervene(const std::map<VarId, double>& assignments) const;
  Scm intervene(const std::map<std::string, double>& assignments) const;
  Scm clear_interventions() const;
  bool is_observational() const { return interventions_.empty(); }

  // Index of the mechanism producing `id` (observed variables only).
  std::size_t producer(VarId id) const;
  // All variables with a directed path into `id` (excluding `id`).
  std::vector<VarId> ancestors(VarId id) const;
  // Cluster-level edges implied by the mechanisms.
  std::vector<std::pair<std::string, std::string>> cluster_edges() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Cluster> clusters_;
  std::vector<Mechanism> mechanisms_;
  std::map<VarId, NoiseSpec> noise_specs_;
  std::map<VarId, double> interventions_;
  std::vector<VarId> latents_;
  std::vector<std::size_t> latent_column_;  // VarId -> column, npos for observed
  std::vector<std::size_t> producer_;       // VarId -> mechanism, npos for latent
  ScmRoles roles_;
};

class Scm::Builder {
 public:
  VarId add_latent(std::string name, VarKind kind, NoiseSpec spec, std::string cluster);
  VarId add_observed(std::string name, std::string cluster);
  void add_mechanism(std::string cluster, std::vector<VarId> parents, std::vector<VarId> outputs,
                     FunctionPtr fn);
  ScmRoles& roles() { return roles_; }
  VarId id(std::string_view name) const;

  // Validates every structural invariant and fixes the evaluation order.
  // Throws InvalidStructureError on violation.
  Scm build() &&;

 private:
  std::vector<Variable> variables_;
  std::vector<std::string> cluster_order_;
  std::map<VarId, NoiseSpec> noise_specs_;
  std::vector<Mechanism> mechanisms_;
  ScmRoles roles_;
};

}  // namespace causalfm
