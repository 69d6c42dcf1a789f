#include "causalfm/sampling.hpp"

#include <cmath>

#include "causalfm/error.hpp"

namespace causalfm {

std::vector<double> Table::column(std::size_t j) const {
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = at(i, j);
  return out;
}

Table draw_exogenous(const Scm& scm, std::size_t n, std::uint64_t seed, std::uint64_t first_row) {
  const auto& latents = scm.latents();
  Table table(n, latents.size());
  std::vector<NoiseSpec> specs;
  specs.reserve(latents.size());
  for (VarId v : latents) specs.push_back(scm.noise_specs().at(v));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, first_row + i);
    auto row = table.row(i);
    for (std::size_t j = 0; j < specs.size(); ++j) row[j] = specs[j].draw(rng);
  }
  return table;
}

Table evaluate(const Scm& scm, const Table& exogenous) {
  if (exogenous.cols != scm.latents().size()) {
    throw InputError("exogenous table has the wrong number of columns");
  }
  const std::size_t n = exogenous.rows;
  Table out(n, scm.size());
  const auto& mechanisms = scm.mechanisms();
  const auto& interventions = scm.interventions();

  // Per-mechanism: does every output carry an intervention?
  std::vector<bool> fully_fixed(mechanisms.size());
  std::size_t max_parents = 0;
  std::size_t max_outputs = 0;
  for (std::size_t m = 0; m < mechanisms.size(); ++m) {
    bool all = true;
    for (VarId o : mechanisms[m].outputs) all = all && interventions.count(o) > 0;
    fully_fixed[m] = all;
    max_parents = std::max(max_parents, mechanisms[m].parents.size());
    max_outputs = std::max(max_outputs, mechanisms[m].outputs.size());
  }

  std::vector<double> parents(max_parents);
  std::vector<double> outputs(max_outputs);
  for (std::size_t i = 0; i < n; ++i) {
    auto values = out.row(i);
    const auto noise = exogenous.row(i);
    for (std::size_t j = 0; j < scm.latents().size(); ++j) values[scm.latents()[j]] = noise[j];
    for (std::size_t m = 0; m < mechanisms.size(); ++m) {
      const auto& mech = mechanisms[m];
      if (!fully_fixed[m]) {
        for (std::size_t p = 0; p < mech.parents.size(); ++p) parents[p] = values[mech.parents[p]];
        std::span<double> result(outputs.data(), mech.outputs.size());
        mech.fn->evaluate(std::span<const double>(parents.data(), mech.parents.size()), result);
        for (std::size_t k = 0; k < mech.outputs.size(); ++k) {
          if (!std::isfinite(result[k])) {
            throw GenerationError(mech.cluster, "non-finite value for '" +
                                                    scm.variable(mech.outputs[k]).name +
                                                    "' in cluster '" + mech.cluster + "'");
          }
          values[mech.outputs[k]] = result[k];
        }
      }
      for (VarId o : mech.outputs) {
        if (auto it = interventions.find(o); it != interventions.end()) values[o] = it->second;
      }
    }
  }
  return out;
}

Dataset to_dataset(const Scm& scm, const Table& values) {
  const auto& roles = scm.roles();
  if (!roles.treatment || !roles.outcome) {
    throw InputError("SCM roles must name a treatment and an outcome to form a dataset");
  }
  DatasetSchema schema = DatasetSchema::make(roles.setting, roles.covariates.size(),
                                             roles.aux.size(), roles.treatment_type);
  for (std::size_t j = 0; j < roles.covariates.size(); ++j) {
    schema.columns[j] = scm.variable(roles.covariates[j]).name;
  }
  for (std::size_t j = 0; j < roles.aux.size(); ++j) {
    schema.columns[roles.covariates.size() + j] = scm.variable(roles.aux[j]).name;
  }
  schema.columns[schema.columns.size() - 2] = scm.variable(*roles.treatment).name;
  schema.columns.back() = scm.variable(*roles.outcome).name;

  Dataset data(std::move(schema));
  data.reserve(values.rows);
  std::vector<double> x(roles.covariates.size());
  std::vector<double> aux(roles.aux.size());
  for (std::size_t i = 0; i < values.rows; ++i) {
    const auto row = values.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = row[roles.covariates[j]];
    for (std::size_t j = 0; j < aux.size(); ++j) aux[j] = row[roles.aux[j]];
    data.push_row(x, aux, row[*roles.treatment], row[*roles.outcome]);
  }
  return data;
}

Dataset sample_observational(const Scm& scm, std::size_t n, std::uint64_t seed,
                             std::uint64_t first_row) {
  if (!scm.is_observational()) throw PreconditionError("sample_observational needs an observational SCM");
  if (n == 0) throw PreconditionError("sample_observational needs n >= 1");
  return to_dataset(scm, evaluate(scm, draw_exogenous(scm, n, seed, first_row)));
}

CounterfactualSample counterfactual_from(const Scm& scm, Table exogenous, double a0, double a1) {
  const auto& roles = scm.roles();
  if (!scm.is_observational()) throw PreconditionError("counterfactual sampling needs an observational SCM");
  if (!roles.treatment || !roles.outcome) throw PreconditionError("SCM has no treatment/outcome roles");
  const VarId treatment = *roles.treatment;
  const VarId outcome = *roles.outcome;
  const Table arm0 = evaluate(scm.intervene(std::map<VarId, double>{{treatment, a0}}), exogenous);
  const Table arm1 = evaluate(scm.intervene(std::map<VarId, double>{{treatment, a1}}), exogenous);

  CounterfactualSample sample;
  sample.d_x = roles.covariates.size();
  const std::size_t n = exogenous.rows;
  sample.x.resize(n * sample.d_x);
  sample.y0.resize(n);
  sample.y1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < sample.d_x; ++j) {
      sample.x[i * sample.d_x + j] = arm0.at(i, roles.covariates[j]);
    }
    sample.y0[i] = arm0.at(i, outcome);
    sample.y1[i] = arm1.at(i, outcome);
  }
  sample.exogenous = std::move(exogenous);
  return sample;
}

CounterfactualSample sample_counterfactual(const Scm& scm, std::size_t n, double a0, double a1,
                                           std::uint64_t seed, std::uint64_t first_row) {
  return counterfactual_from(scm, draw_exogenous(scm, n, seed, first_row), a0, a1);
}

double LinearGaussianForm::covariance(VarId a, VarId b) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < n_latent; ++k) acc += loadings[a * n_latent + k] * loadings[b * n_latent + k];
  return acc;
}

std::optional<LinearGaussianForm> linear_gaussian_form(const Scm& scm) {
  const std::size_t n_latent = scm.latents().size();
  LinearGaussianForm form;
  form.n_latent = n_latent;
  form.mean.assign(scm.size(), 0.0);
  form.loadings.assign(scm.size() * n_latent, 0.0);
  for (std::size_t j = 0; j < n_latent; ++j) {
    const VarId v = scm.latents()[j];
    const NoiseSpec& spec = scm.noise_specs().at(v);
    if (spec.family != NoiseFamily::normal) return std::nullopt;
    form.mean[v] = spec.location;
    form.loadings[v * n_latent + j] = spec.scale;
  }
  for (const auto& mech : scm.mechanisms()) {
    const auto linear = mech.fn->linear_form(mech.parents.size(), mech.outputs.size());
    if (!linear) return std::nullopt;
    for (std::size_t k = 0; k < mech.outputs.size(); ++k) {
      const VarId out = mech.outputs[k];
      if (auto it = scm.interventions().find(out); it != scm.interventions().end()) {
        form.mean[out] = it->second;
        continue;  // loadings stay zero
      }
      double mean = linear->bias[k];
      for (std::size_t p = 0; p < mech.parents.size(); ++p) {
        const double w = linear->weights[k * mech.parents.size() + p];
        const VarId parent = mech.parents[p];
        mean += w * form.mean[parent];
        for (std::size_t j = 0; j < n_latent; ++j) {
          form.loadings[out * n_latent + j] += w * form.loadings[parent * n_latent + j];
        }
      }
      form.mean[out] = mean;
    }
  }
  return form;
}

}  // namespace causalfm

namespace causalfm {

std::vector<double> conditional_average_effect(const Scm& scm, const Table& exogenous, double a0,
                                               double a1, std::size_t draws, std::uint64_t seed) {
  const auto& roles = scm.roles();
  if (!roles.treatment || !roles.outcome) throw PreconditionError("SCM has no treatment/outcome roles");
  if (draws == 0) throw PreconditionError("conditional_average_effect needs draws >= 1");
  std::vector<bool> pinned(scm.size(), false);
  for (VarId x : roles.covariates) {
    for (VarId a : scm.ancestors(x)) pinned[a] = true;
  }
  std::vector<std::size_t> free_columns;
  for (std::size_t j = 0; j < scm.latents().size(); ++j) {
    if (!pinned[scm.latents()[j]]) free_columns.push_back(j);
  }
  const std::size_t n = exogenous.rows;
  Table expanded(n * draws, exogenous.cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < draws; ++d) {
      auto row = expanded.row(i * draws + d);
      std::copy(exogenous.row(i).begin(), exogenous.row(i).end(), row.begin());
      Rng rng(seed, i, static_cast<std::uint32_t>(d + 1));
      for (std::size_t j : free_columns) row[j] = scm.noise_specs().at(scm.latents()[j]).draw(rng);
    }
  }
  const VarId t = *roles.treatment;
  const VarId y = *roles.outcome;
  const Table arm0 = evaluate(scm.intervene(std::map<VarId, double>{{t, a0}}), expanded);
  const Table arm1 = evaluate(scm.intervene(std::map<VarId, double>{{t, a1}}), expanded);
  std::vector<double> effect(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < draws; ++d) acc += arm1.at(i * draws + d, y) - arm0.at(i * draws + d, y);
    effect[i] = acc / static_cast<double>(draws);
  }
  return effect;
}

}  // namespace causalfm
