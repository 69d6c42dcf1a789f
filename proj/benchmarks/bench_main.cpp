#include <benchmark/benchmark.h>

#include <vector>

#include "causalfm/constraints.hpp"
#include "causalfm/learners.hpp"
#include "causalfm/model.hpp"
#include "causalfm/prior.hpp"
#include "causalfm/sampling.hpp"

using namespace causalfm;

namespace {

Dataset context(std::size_t n, std::size_t d_x) {
  Dataset d(DatasetSchema::make(Setting::back_door, d_x, 0, TreatmentType::binary));
  Rng rng(1);
  std::vector<double> x(d_x);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = rng.normal();
    const double a = rng.uniform() < 0.5 ? 1.0 : 0.0;
    d.push_row(x, {}, a, x[0] + a + rng.normal());
  }
  return d;
}

QuerySet queries(std::size_t m, std::size_t d_x) {
  QuerySet q{d_x, {}};
  Rng rng(2);
  for (std::size_t i = 0; i < m * d_x; ++i) q.x.push_back(rng.normal());
  return q;
}

void BM_Forward(benchmark::State& state) {
  const PfnModel model(ArchConfig{}, 3);
  const PreparedInput in = prepare_input(model.arch(), context(static_cast<std::size_t>(state.range(0)), 5), queries(128, 5));
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(in));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
  const PfnModel model(ArchConfig{}, 3);
  const PreparedInput in = prepare_input(model.arch(), context(static_cast<std::size_t>(state.range(0)), 5), queries(128, 5));
  const std::vector<int> targets(128, 1);
  std::vector<double> grad(model.param_count());
  for (auto _ : state) benchmark::DoNotOptimize(model.loss_gradient(in, targets, grad));
}
BENCHMARK(BM_Gradient)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SampleScm(benchmark::State& state) {
  const SettingSpec spec = SettingSpec::make(static_cast<Setting>(state.range(0)));
  const BnnPriorConfig prior;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_scm(spec, prior, seed++));
}
BENCHMARK(BM_SampleScm)
    ->Arg(static_cast<int>(Setting::back_door))
    ->Arg(static_cast<int>(Setting::front_door))
    ->Arg(static_cast<int>(Setting::iv))
    ->Unit(benchmark::kMillisecond);

void BM_SampleRows(benchmark::State& state) {
  const Scm scm = sample_scm(SettingSpec::make(Setting::back_door), BnnPriorConfig{}, 4);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_observational(scm, 1024, seed++));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_SampleRows)->Unit(benchmark::kMillisecond);

void BM_CheckConstraints(benchmark::State& state) {
  const SettingSpec spec = SettingSpec::make(Setting::front_door);
  const Scm scm = sample_scm(spec, BnnPriorConfig{}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(check_constraints(scm, spec, 200, 6));
}
BENCHMARK(BM_CheckConstraints)->Unit(benchmark::kMillisecond);

void BM_TLearnerKnn(benchmark::State& state) {
  const Dataset d = context(1000, 5);
  const QuerySet q = queries(200, 5);
  for (auto _ : state) benchmark::DoNotOptimize(t_learner(d, q, RegressorSpec::knn()));
}
BENCHMARK(BM_TLearnerKnn)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
