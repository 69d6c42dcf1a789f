#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalfm/checkpoint.hpp"
#include "causalfm/dataset.hpp"
#include "causalfm/kv_config.hpp"
#include "causalfm/learners.hpp"
#include "causalfm/model.hpp"

namespace causalfm {

enum class BenchmarkKind { prior, linear };

// One synthetic benchmark dataset. `prior` draws a back-door SCM from the
// BNN prior; `linear` is the analytic DGP
//   x ~ N(0, I), a ~ Bern(clip(sigmoid(overlap * x_1), eps, 1 - eps)),
//   y = beta . x + a * (tau_0 + tau . x) + noise_sd * N(0, 1).
struct BenchmarkSpec {
  std::string id;
  BenchmarkKind kind = BenchmarkKind::prior;
  std::uint64_t seed = 0;
  std::size_t n = 1000;           // pool size
  double train_fraction = 0.8;    // per-seed split of the pool
  std::size_t d_x = 4;
  double epsilon = 0.05;
  // prior kind
  double weight_scale = 1.0;
  double noise_scale = 0.0;       // extra outcome noise, in units of sd(y)
  double min_heterogeneity = 0.0; // required sd(tau) / sd(y)
  std::size_t cate_draws = 32;
  // linear kind
  std::vector<double> beta;       // d_x (default all ones)
  double tau0 = 1.0;
  std::vector<double> tau;        // d_x (default zeros)
  double noise_sd = 0.0;
  double overlap = 1.0;

  static BenchmarkSpec from(const KvConfig& config);
  static BenchmarkSpec load(const std::string& path);
};

// Loads every "*.cfg" spec of a directory (sorted by file name), or a single spec file.
std::vector<BenchmarkSpec> load_suite(const std::string& path);

// Fully generated pool with its true CATE per row.
struct BenchmarkData {
  std::string id;
  Dataset data;
  std::vector<double> true_cate;
  double train_fraction = 0.8;
};

BenchmarkData generate_benchmark_data(const BenchmarkSpec& spec);

struct Split {
  Dataset train;
  QuerySet test;
  std::vector<double> test_cate;
};

// Deterministic per-seed train/test split shared by all methods.
Split split_for_seed(const BenchmarkData& data, std::uint64_t seed);

struct MethodInput {
  const Dataset& train;
  const QuerySet& test;
  std::span<const double> true_cate;  // only the oracle looks
};

struct Method {
  std::string name;
  std::function<std::vector<double>(const MethodInput&)> estimate;
};

// oracle, zero, t_ridge, t_knn, s_ridge, s_knn. Throws ConfigError otherwise.
Method builtin_method(const std::string& name);
std::vector<std::string> builtin_method_names();

// PFN in-context CATE in outcome units; contexts longer than max_context
// use their first max_context rows.
Method causalfm_method(std::shared_ptr<const Checkpoint> checkpoint);
std::vector<double> causalfm_predict(const PfnModel& model, const Checkpoint& checkpoint, const Dataset& context,
                                     const QuerySet& queries);

struct RunRecord {
  std::string dataset_id;
  std::string method;
  std::uint64_t seed = 0;
  std::optional<double> pehe;  // missing when the method failed
  std::string error;
};

struct BenchmarkRow {
  std::string dataset_id;
  std::string method;
  std::optional<double> pehe_mean;
  std::optional<double> pehe_std;  // sample std; missing below two seeds
  std::size_t seed_count = 0;
};

struct BenchmarkResult {
  std::vector<RunRecord> runs;
  std::vector<BenchmarkRow> rows;

  std::string runs_csv() const;       // dataset_id,method,seed,pehe
  std::string aggregate_csv() const;  // dataset_id,method,pehe_mean,pehe_std
};

// Cells (dataset, method, seed) run on up to `jobs` threads; results are
// ordered by (dataset, method, seed) in input order.
BenchmarkResult run_benchmark(const std::vector<BenchmarkData>& suite, const std::vector<Method>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);
BenchmarkResult run_benchmark(const std::vector<BenchmarkSpec>& suite, const std::vector<Method>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

}  // namespace causalfm
