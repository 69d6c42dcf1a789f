#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "causalfm/checkpoint.hpp"
#include "causalfm/dataset.hpp"
#include "causalfm/kv_config.hpp"
#include "causalfm/model.hpp"
#include "causalfm/prior.hpp"

namespace causalfm {

struct TrainConfig {
  Setting setting = Setting::back_door;
  BnnPriorConfig prior;
  std::pair<std::size_t, std::size_t> sample_size{64, 1024};  // Pi_N, uniform
  std::size_t n_queries = 128;  // per training step
  // Query rows drawn per example; each epoch a training example uses a
  // random n_queries of them, validation uses the first n_queries.
  std::size_t query_pool = 512;
  std::size_t n_datasets = 500;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  std::pair<double, double> thresholds{-0.1, 0.1};  // in units of std(y_context)
  ArchConfig arch;
  // Each epoch a training example sees a random subset of its context rows
  // (size uniform in [sample_size.lo, N]); validation contexts stay whole.
  bool resample_context = true;
  std::size_t jobs = 1;

  void validate() const;
  // Required keys: setting, n_datasets, max_epochs. Unknown keys are rejected.
  static TrainConfig from(const KvConfig& config);
  KvConfig to_kv() const;
};

// Class 0 if value < lo, 1 if lo <= value <= hi, 2 if value > hi.
int discretize_target(double value, std::pair<double, double> thresholds);

struct TrainingExample {
  std::uint64_t seed = 0;
  Dataset context;
  QuerySet queries;
  std::vector<double> query_treatment;  // CAPO level a* (continuous treatment only)
  std::vector<double> targets;          // ITE (binary treatment) or CAPO
  double target_center = 0.0;           // CAPO targets are centered at mean(y_context)
  double target_scale = 1.0;            // std of the context outcomes
  std::vector<int> classes;
};

// Draws N ~ Pi_N, an SCM from the prior and an observational context of N
// rows (row streams [0, N)); queries use the disjoint row streams
// [N, N + max(n_queries, query_pool)) and shared-noise potential outcomes.
TrainingExample build_training_example(const TrainConfig& config, std::uint64_t seed);

struct EpochLog {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  double wall_seconds = 0.0;
};

std::string log_to_csv(const std::vector<EpochLog>& log, bool include_wall_time = true);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// AdamW(0.9, 0.999, 1e-8) on the mean query NLL; returns the
// best-validation checkpoint. Throws TrainingError on a non-finite loss.
TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch = {});

// Class-conditional means of standardized targets (class midpoint if empty).
std::vector<double> bin_values_from(const std::vector<TrainingExample>& examples, std::size_t n_classes,
                                    std::pair<double, double> thresholds);

double mean_nll(const PfnModel& model, const std::vector<TrainingExample>& examples);

}  // namespace causalfm
