#include "causalfm/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "causalfm/error.hpp"
#include "causalfm/metrics.hpp"
#include "causalfm/parallel.hpp"
#include "causalfm/prior.hpp"
#include "causalfm/rng.hpp"
#include "causalfm/sampling.hpp"

namespace causalfm {

namespace {

std::string format(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

std::string format(const std::optional<double>& v) { return v ? format(*v) : "NA"; }

BenchmarkData generate_prior(const BenchmarkSpec& spec) {
  BnnPriorConfig prior;
  prior.d_x = {static_cast<int>(spec.d_x), static_cast<int>(spec.d_x)};
  prior.weight_scale = spec.weight_scale;
  prior.positivity_epsilon = spec.epsilon;
  prior.validate();
  const SettingSpec setting = SettingSpec::make(Setting::back_door);
  for (int attempt = 0; attempt < kPriorRetryBudget; ++attempt) {
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(attempt));
    std::optional<Scm> scm;
    try {
      scm = sample_scm(setting, prior, seed);
    } catch (const PriorRejectionError&) {
      continue;
    }
    const Table exo = draw_exogenous(*scm, spec.n, derive_seed(seed, "rows"));
    const Dataset clean = to_dataset(*scm, evaluate(*scm, exo));
    std::vector<double> cate =
        conditional_average_effect(*scm, exo, 0.0, 1.0, spec.cate_draws, derive_seed(seed, "cate"));
    const double sd_y = population_std(clean.outcomes());
    if (population_std(cate) < spec.min_heterogeneity * sd_y) continue;

    BenchmarkData out;
    out.id = spec.id;
    out.train_fraction = spec.train_fraction;
    out.true_cate = std::move(cate);
    DatasetSchema schema = clean.schema();
    schema.provenance = {{"benchmark_id", spec.id}, {"seed", spec.seed}, {"attempt", attempt}};
    out.data = Dataset(schema);
    out.data.reserve(spec.n);
    const std::uint64_t noise_seed = derive_seed(seed, "noise");
    for (std::size_t i = 0; i < spec.n; ++i) {
      double y = clean.y(i);
      if (spec.noise_scale > 0.0) {
        Rng rng(noise_seed, i);
        y += spec.noise_scale * sd_y * rng.normal();
      }
      out.data.push_row(clean.x(i), clean.aux(i), clean.a(i), y);
    }
    return out;
  }
  throw PriorRejectionError("benchmark '" + spec.id + "': no prior draw met the heterogeneity floor");
}

BenchmarkData generate_linear(const BenchmarkSpec& spec) {
  const std::size_t d = spec.d_x;
  const std::vector<double> beta = spec.beta.empty() ? std::vector<double>(d, 1.0) : spec.beta;
  const std::vector<double> tau = spec.tau.empty() ? std::vector<double>(d, 0.0) : spec.tau;
  if (beta.size() != d || tau.size() != d) throw ConfigError("beta", "beta and tau need d_x entries");
  BenchmarkData out;
  out.id = spec.id;
  out.train_fraction = spec.train_fraction;
  DatasetSchema schema = DatasetSchema::make(Setting::back_door, d, 0, TreatmentType::binary);
  schema.provenance = {{"benchmark_id", spec.id}, {"seed", spec.seed}};
  out.data = Dataset(schema);
  out.data.reserve(spec.n);
  out.true_cate.reserve(spec.n);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Rng rng(spec.seed, i);
    for (double& v : x) v = rng.normal();
    const double score = d ? spec.overlap * x[0] : 0.0;
    const double p = std::clamp(sigmoid(score), spec.epsilon, 1.0 - spec.epsilon);
    const double a = rng.bernoulli(p) ? 1.0 : 0.0;
    double effect = spec.tau0;
    double base = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      effect += tau[j] * x[j];
      base += beta[j] * x[j];
    }
    const double noise = rng.normal();
    out.data.push_row(x, {}, a, base + a * effect + spec.noise_sd * noise);
    out.true_cate.push_back(effect);
  }
  return out;
}

}  // namespace

BenchmarkSpec BenchmarkSpec::from(const KvConfig& c) {
  BenchmarkSpec s;
  s.id = c.get_string("id");
  const std::string kind = c.get_string("kind");
  if (kind == "prior") {
    s.kind = BenchmarkKind::prior;
  } else if (kind == "linear") {
    s.kind = BenchmarkKind::linear;
  } else {
    throw ConfigError("kind", "benchmark kind must be 'prior' or 'linear', got '" + kind + "'");
  }
  s.seed = c.get_uint("seed");
  s.n = c.get_uint("n");
  if (c.has("d_x")) s.d_x = c.get_uint("d_x");
  s.train_fraction = c.double_or("train_fraction", s.train_fraction);
  s.epsilon = c.double_or("epsilon", s.epsilon);
  s.weight_scale = c.double_or("weight_scale", s.weight_scale);
  s.noise_scale = c.double_or("noise_scale", s.noise_scale);
  s.min_heterogeneity = c.double_or("min_heterogeneity", s.min_heterogeneity);
  if (c.has("cate_draws")) s.cate_draws = c.get_uint("cate_draws");
  if (c.has("beta")) s.beta = c.get_doubles("beta");
  if (c.has("tau")) s.tau = c.get_doubles("tau");
  s.tau0 = c.double_or("tau0", s.tau0);
  s.noise_sd = c.double_or("noise_sd", s.noise_sd);
  s.overlap = c.double_or("overlap", s.overlap);
  c.reject_unused();
  if (s.n < 4) throw ConfigError("n", "benchmark pool needs n >= 4");
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw ConfigError("train_fraction", "train_fraction must lie in (0, 1)");
  }
  if (!(s.epsilon > 0.0 && s.epsilon < 0.5)) throw ConfigError("epsilon", "epsilon must lie in (0, 0.5)");
  if (s.cate_draws == 0) throw ConfigError("cate_draws", "cate_draws must be >= 1");
  return s;
}

BenchmarkSpec BenchmarkSpec::load(const std::string& path) { return from(KvConfig::load(path)); }

std::vector<BenchmarkSpec> load_suite(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("benchmark suite not found: " + path);
  if (!fs::is_directory(path, ec)) return {BenchmarkSpec::load(path)};
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no *.cfg benchmark specs in " + path);
  std::vector<BenchmarkSpec> suite;
  for (const auto& f : files) suite.push_back(BenchmarkSpec::load(f));
  return suite;
}

BenchmarkData generate_benchmark_data(const BenchmarkSpec& spec) {
  return spec.kind == BenchmarkKind::prior ? generate_prior(spec) : generate_linear(spec);
}

Split split_for_seed(const BenchmarkData& data, std::uint64_t seed) {
  const std::size_t n = data.data.n();
  if (n < 2) throw InputError("benchmark pool needs at least two rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(data.train_fraction * static_cast<double>(n))), 1, n - 1);
  Split s;
  s.train = data.data.subset(std::span<const std::size_t>(order.data(), n_train));
  s.test.d_x = data.data.d_x();
  for (std::size_t k = n_train; k < n; ++k) {
    const auto x = data.data.x(order[k]);
    s.test.x.insert(s.test.x.end(), x.begin(), x.end());
    s.test_cate.push_back(data.true_cate[order[k]]);
  }
  return s;
}

std::vector<std::string> builtin_method_names() { return {"oracle", "zero", "t_ridge", "t_knn", "s_ridge", "s_knn"}; }

Method builtin_method(const std::string& name) {
  if (name == "oracle") {
    return {name, [](const MethodInput& in) { return std::vector<double>(in.true_cate.begin(), in.true_cate.end()); }};
  }
  if (name == "zero") {
    return {name, [](const MethodInput& in) { return std::vector<double>(in.test.m(), 0.0); }};
  }
  const auto base = [&]() -> std::optional<RegressorSpec> {
    if (name.size() > 2 && name.substr(2) == "ridge") return RegressorSpec::ridge();
    if (name.size() > 2 && name.substr(2) == "knn") return RegressorSpec::knn();
    return std::nullopt;
  }();
  if (base && name.starts_with("t_")) {
    return {name, [b = *base](const MethodInput& in) { return t_learner(in.train, in.test, b); }};
  }
  if (base && name.starts_with("s_")) {
    return {name, [b = *base](const MethodInput& in) { return s_learner(in.train, in.test, b).cate; }};
  }
  throw ConfigError("methods", "unknown method '" + name + "'");
}

std::vector<double> causalfm_predict(const PfnModel& model, const Checkpoint& ck, const Dataset& context,
                                     const QuerySet& queries) {
  const Dataset* ctx = &context;
  Dataset truncated;
  if (context.n() > ck.arch.max_context) {
    std::vector<std::size_t> rows(ck.arch.max_context);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    truncated = context.subset(rows);
    ctx = &truncated;
  }
  const PreparedInput prepared = prepare_input(ck.arch, *ctx, queries);
  const RowMatrix probs = model.forward(prepared);
  std::vector<double> cate(queries.m());
  for (std::size_t q = 0; q < cate.size(); ++q) {
    const std::span<const double> row(probs.data() + q * static_cast<std::size_t>(probs.cols()),
                                      static_cast<std::size_t>(probs.cols()));
    cate[q] = predict_cate(row, ck.bin_values).point * prepared.y_std;
  }
  return cate;
}

Method causalfm_method(std::shared_ptr<const Checkpoint> checkpoint) {
  auto model = std::make_shared<const PfnModel>(checkpoint->model());
  return {"causalfm", [checkpoint, model](const MethodInput& in) {
            return causalfm_predict(*model, *checkpoint, in.train, in.test);
          }};
}

std::string BenchmarkResult::runs_csv() const {
  std::ostringstream out;
  out << "dataset_id,method,seed,pehe\n";
  for (const auto& r : runs) out << r.dataset_id << ',' << r.method << ',' << r.seed << ',' << format(r.pehe) << '\n';
  return out.str();
}

std::string BenchmarkResult::aggregate_csv() const {
  std::ostringstream out;
  out << "dataset_id,method,pehe_mean,pehe_std\n";
  for (const auto& r : rows) {
    out << r.dataset_id << ',' << r.method << ',' << format(r.pehe_mean) << ',' << format(r.pehe_std) << '\n';
  }
  return out.str();
}

BenchmarkResult run_benchmark(const std::vector<BenchmarkData>& suite, const std::vector<Method>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (suite.empty() || methods.empty() || seeds.empty()) {
    throw PreconditionError("run_benchmark needs a nonempty suite, method list and seed list");
  }
  const std::size_t n_d = suite.size(), n_m = methods.size(), n_s = seeds.size();
  std::vector<Split> splits(n_d * n_s);
  parallel_for(splits.size(), jobs, [&](std::size_t k) { splits[k] = split_for_seed(suite[k / n_s], seeds[k % n_s]); });

  BenchmarkResult result;
  result.runs.resize(n_d * n_m * n_s);
  parallel_for(result.runs.size(), jobs, [&](std::size_t k) {
    const std::size_t d = k / (n_m * n_s), m = (k / n_s) % n_m, s = k % n_s;
    RunRecord& rec = result.runs[k];
    rec.dataset_id = suite[d].id;
    rec.method = methods[m].name;
    rec.seed = seeds[s];
    const Split& split = splits[d * n_s + s];
    try {
      const auto predicted = methods[m].estimate({split.train, split.test, split.test_cate});
      rec.pehe = pehe(predicted, split.test_cate).value;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });

  for (std::size_t d = 0; d < n_d; ++d) {
    for (std::size_t m = 0; m < n_m; ++m) {
      BenchmarkRow row;
      row.dataset_id = suite[d].id;
      row.method = methods[m].name;
      std::vector<double> values;
      for (std::size_t s = 0; s < n_s; ++s) {
        const auto& rec = result.runs[(d * n_m + m) * n_s + s];
        if (rec.pehe) values.push_back(*rec.pehe);
      }
      row.seed_count = values.size();
      if (!values.empty()) row.pehe_mean = mean(values);
      if (values.size() >= 2) row.pehe_std = sample_std(values);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

BenchmarkResult run_benchmark(const std::vector<BenchmarkSpec>& suite, const std::vector<Method>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  std::vector<BenchmarkData> data(suite.size());
  parallel_for(suite.size(), jobs, [&](std::size_t i) { data[i] = generate_benchmark_data(suite[i]); });
  return run_benchmark(data, methods, seeds, jobs);
}

}  // namespace causalfm
