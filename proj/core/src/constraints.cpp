#include "causalfm/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "causalfm/error.hpp"
#include "causalfm/metrics.hpp"
#include "causalfm/sampling.hpp"

namespace causalfm {

namespace {

// Latent parents of `mech` that may be redrawn without disturbing the
// observed parents (i.e. are not their ancestors).
std::vector<std::size_t> free_latent_slots(const Scm& scm, const Mechanism& mech,
                                           std::span<const std::size_t> slots) {
  std::set<VarId> pinned;
  for (std::size_t s : slots) {
    const VarId p = mech.parents[s];
    if (scm.variable(p).kind == VarKind::observed) {
      for (VarId a : scm.ancestors(p)) pinned.insert(a);
    }
  }
  std::vector<std::size_t> free;
  for (std::size_t s : slots) {
    const VarId p = mech.parents[s];
    if (is_latent(scm.variable(p).kind) && !pinned.count(p)) free.push_back(s);
  }
  return free;
}

// Average effect of the instrument on the treatment per unit of instrument,
// from shared-noise evaluations under do(Z = lo) and do(Z = hi). Binary
// instruments use {0, 1}, others mean -/+ one sd.
double instrument_effect(const Scm& scm, const Table& exogenous, const Table& values, VarId z, VarId a) {
  const std::vector<double> zc = values.column(z);
  const bool binary = std::all_of(zc.begin(), zc.end(), [](double v) { return v == 0.0 || v == 1.0; });
  double lo = 0.0, hi = 1.0;
  if (!binary) {
    const double mu = mean(zc), sd = population_std(zc);
    lo = mu - sd;
    hi = mu + sd;
    if (!(hi > lo)) return 0.0;
  }
  const Table t0 = evaluate(scm.intervene(std::map<VarId, double>{{z, lo}}), exogenous);
  const Table t1 = evaluate(scm.intervene(std::map<VarId, double>{{z, hi}}), exogenous);
  double sum = 0.0;
  for (std::size_t i = 0; i < exogenous.rows; ++i) sum += t1.at(i, a) - t0.at(i, a);
  return sum / static_cast<double>(exogenous.rows) / (hi - lo);
}

ConstraintResult fail(std::string which, std::string detail) {
  ConstraintResult r;
  r.pass = false;
  r.which = std::move(which);
  r.detail = std::move(detail);
  return r;
}

}  // namespace

std::vector<double> conditional_propensity(const Scm& scm, VarId node, const Table& values,
                                           std::uint64_t seed, std::optional<VarId> override_parent,
                                           double override_value) {
  const Mechanism& mech = scm.mechanisms()[scm.producer(node)];
  if (mech.outputs.size() != 1) throw PreconditionError("propensity needs a single-output mechanism");
  const BernoulliGate* gate = mech.fn->as_gate();

  std::vector<std::size_t> slots(mech.parents.size());
  for (std::size_t s = 0; s < slots.size(); ++s) slots[s] = s;
  std::vector<std::size_t> free;
  std::size_t draws = 1;
  if (gate) {
    // The gate noise is integrated analytically; only score parents matter.
    std::vector<std::size_t> score_slots(gate->n_score_parents());
    for (std::size_t s = 0; s < score_slots.size(); ++s) score_slots[s] = s;
    free = free_latent_slots(scm, mech, score_slots);
  } else {
    free = free_latent_slots(scm, mech, slots);
  }
  if (!free.empty() || !gate) draws = free.empty() ? 1 : kPropensityDraws;

  std::optional<std::size_t> override_slot;
  if (override_parent) {
    auto it = std::find(mech.parents.begin(), mech.parents.end(), *override_parent);
    if (it == mech.parents.end()) throw PreconditionError("override variable is not a parent");
    override_slot = static_cast<std::size_t>(it - mech.parents.begin());
  }

  std::vector<double> result(values.rows);
  std::vector<double> parents(mech.parents.size());
  for (std::size_t i = 0; i < values.rows; ++i) {
    for (std::size_t s = 0; s < parents.size(); ++s) parents[s] = values.at(i, mech.parents[s]);
    if (override_slot) parents[*override_slot] = override_value;
    Rng rng(seed, i, 7);
    double acc = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      if (draws > 1) {
        for (std::size_t s : free) parents[s] = scm.noise_specs().at(mech.parents[s]).draw(rng);
      }
      if (gate) {
        acc += gate->propensity(parents);
      } else {
        double out = 0.0;
        mech.fn->evaluate(parents, std::span<double>(&out, 1));
        acc += out;
      }
    }
    result[i] = acc / static_cast<double>(draws);
  }
  return result;
}

ConstraintResult check_constraints(const Scm& scm, const SettingSpec& setting, std::size_t n_probe,
                                   std::uint64_t seed, double epsilon) {
  if (n_probe < 100) throw PreconditionError("check_constraints needs n_probe >= 100");
  const auto& roles = scm.roles();
  const Table exogenous = draw_exogenous(scm, n_probe, seed);
  const Table values = evaluate(scm, exogenous);
  ConstraintResult result;
  const double lo = epsilon / 2.0;
  const double hi = 1.0 - epsilon / 2.0;

  auto positivity = [&](VarId node, const char* which, std::optional<VarId> stratum) -> bool {
    std::vector<std::optional<double>> fixes{std::nullopt};
    if (stratum) fixes = {0.0, 1.0};
    for (const auto& fix : fixes) {
      const auto p = fix ? conditional_propensity(scm, node, values, seed, stratum, *fix)
                         : conditional_propensity(scm, node, values, seed);
      for (double v : p) {
        result.min_propensity = std::min(result.min_propensity, v);
        result.max_propensity = std::max(result.max_propensity, v);
        if (!(v >= lo && v <= hi)) {
          std::ostringstream msg;
          msg << "propensity " << v << " of '" << scm.variable(node).name << "' outside [" << lo
              << ", " << hi << "]";
          const double mn = result.min_propensity, mx = result.max_propensity;
          result = fail(which, msg.str());
          result.min_propensity = mn;
          result.max_propensity = mx;
          return false;
        }
      }
    }
    return true;
  };

  for (ConstraintKind kind : setting.constraints) {
    switch (kind) {
      case ConstraintKind::treatment_positivity:
        if (!roles.treatment) return fail("positivity", "no treatment role");
        if (!positivity(*roles.treatment, "positivity", std::nullopt)) return result;
        break;
      case ConstraintKind::mediator_positivity:
        if (roles.aux.empty()) return fail("mediator_positivity", "no mediator role");
        if (!positivity(roles.aux.front(), "mediator_positivity", roles.treatment)) return result;
        break;
      case ConstraintKind::instrument_positivity:
        if (roles.aux.empty()) return fail("instrument_positivity", "no instrument role");
        if (!positivity(roles.aux.front(), "instrument_positivity", std::nullopt)) return result;
        break;
      case ConstraintKind::instrument_relevance: {
        if (roles.aux.empty() || !roles.treatment) return fail("relevance", "no instrument role");
        const double effect = instrument_effect(scm, exogenous, values, roles.aux.front(), *roles.treatment);
        const double sd_a = population_std(values.column(*roles.treatment));
        if (!(std::abs(effect) >= kRelevanceCheckFloor * sd_a)) {
          return fail("relevance", "average effect of instrument on treatment is " + std::to_string(effect) +
                                       " (sd(A) " + std::to_string(sd_a) + ")");
        }
        break;
      }
      case ConstraintKind::additive_outcome: {
        if (!roles.outcome || !roles.treatment) return fail("additivity", "no outcome role");
        const Mechanism& mech = scm.mechanisms()[scm.producer(*roles.outcome)];
        const AdditiveFunction* add = mech.fn->as_additive();
        if (!add) return fail("additivity", "outcome mechanism is not additive");
        bool a_in_f = false;
        for (std::size_t s : add->f_parents()) {
          const VarId p = mech.parents.at(s);
          if (p == *roles.treatment) a_in_f = true;
          if (is_latent(scm.variable(p).kind)) return fail("additivity", "latent variable inside f(X, A)");
        }
        for (std::size_t s : add->g_parents()) {
          if (mech.parents.at(s) == *roles.treatment) return fail("additivity", "treatment inside g(X, U)");
        }
        if (!a_in_f) return fail("additivity", "treatment missing from f(X, A)");
        break;
      }
    }
  }
  return result;
}

}  // namespace causalfm
