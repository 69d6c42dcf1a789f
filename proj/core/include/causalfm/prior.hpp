#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causalfm/bnn.hpp"
#include "causalfm/cdag.hpp"
#include "causalfm/kv_config.hpp"
#include "causalfm/rng.hpp"
#include "causalfm/scm.hpp"

namespace causalfm {

enum class ConstraintKind {
  treatment_positivity,
  mediator_positivity,
  instrument_positivity,
  instrument_relevance,
  additive_outcome,
};

std::string_view to_string(ConstraintKind kind);

// A causal inference setting: its C-DAG and the constraint set every prior
// draw must satisfy.
struct SettingSpec {
  Setting kind = Setting::back_door;
  CDag cdag;
  std::vector<ConstraintKind> constraints;

  static SettingSpec make(Setting kind);
};

// Rows drawn once at construction to calibrate propensity standardization,
// discretization thresholds and the instrument-relevance check.
inline constexpr std::size_t kCalibrationRows = 256;
// Minimum partial slope of A on Z (in units of sd(A)) required when
// constructing IV SCMs.
inline constexpr double kRelevanceFloor = 0.25;
// Minimum t statistic of that slope on the calibration rows.
inline constexpr double kRelevanceMinT = 4.0;
inline constexpr int kPriorRetryBudget = 64;

// Draws an SCM from the clustered/observational BNN prior of the setting.
// Latent-only clusters are standard normal; the covariate cluster (X, U_X)
// is a clustered BNN over root noises of mixed families; treatment,
// mediator, instrument and outcome clusters are observational BNNs.
Scm sample_scm(const SettingSpec& setting, const BnnPriorConfig& config, std::uint64_t seed);

// p_i = clip(sigmoid((s_i - mean(s)) / sd(s)), eps, 1 - eps); A_i ~ Bernoulli(p_i)
// drawn from Rng(seed, i).
struct TreatmentAssignment {
  std::vector<double> propensity;
  std::vector<double> treatment;
};
TreatmentAssignment assign_treatment(std::span<const double> raw_scores, double epsilon,
                                     std::uint64_t seed);

// `key = value` prior files: setting plus every BnnPriorConfig field.
BnnPriorConfig prior_config_from(const KvConfig& config);
void write_prior_config(const BnnPriorConfig& prior, KvConfig& out);

}  // namespace causalfm
