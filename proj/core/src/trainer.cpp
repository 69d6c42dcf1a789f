#include "causalfm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "causalfm/error.hpp"
#include "causalfm/parallel.hpp"
#include "causalfm/sampling.hpp"

namespace causalfm {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

class AdamW {
 public:
  AdamW(std::size_t n, double lr, double wd) : m_(n, 0.0), v_(n, 0.0), lr_(lr), wd_(wd) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      const double update = (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kAdamEps);
      params[i] -= lr_ * (update + wd_ * params[i]);
    }
  }

 private:
  std::vector<double> m_, v_;
  double lr_, wd_;
  std::size_t t_ = 0;
};

double population_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  return sd > 1e-12 ? sd : 1.0;
}

// Sorted random subset of {0, .., n - 1} with min(k, n) elements.
std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(rows));
  rows.resize(std::min(k, n));
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::pair<QuerySet, std::vector<int>> select_queries(const TrainingExample& ex, const std::vector<std::size_t>& rows) {
  QuerySet q;
  q.d_x = ex.queries.d_x;
  std::vector<int> classes;
  for (std::size_t r : rows) {
    if (r >= ex.classes.size()) break;
    q.x.insert(q.x.end(), ex.queries.x.begin() + static_cast<std::ptrdiff_t>(r * q.d_x),
               ex.queries.x.begin() + static_cast<std::ptrdiff_t>((r + 1) * q.d_x));
    classes.push_back(ex.classes[r]);
  }
  return {std::move(q), std::move(classes)};
}

std::string number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, std::string("invalid train config '") + key + "': " + what);
  };
  require(setting != Setting::custom, "setting", "must be back_door, front_door or iv");
  require(sample_size.first >= 1 && sample_size.first <= sample_size.second, "sample_size",
          "need 1 <= lo <= hi");
  require(sample_size.second <= arch.max_context, "sample_size", "upper bound exceeds max_context");
  require(n_queries >= 1, "n_queries", "must be >= 1");
  require(n_datasets >= 2, "n_datasets", "must be >= 2");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(learning_rate > 0.0, "learning_rate", "must be > 0");
  require(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(max_epochs >= 1, "max_epochs", "must be >= 1");
  require(patience >= 1, "patience", "must be >= 1");
  require(val_fraction > 0.0 && val_fraction <= 0.5, "val_fraction", "must lie in (0, 0.5]");
  require(thresholds.first < thresholds.second, "thresholds", "need lo < hi");
  require(arch.n_classes == 3, "n_classes", "the effect head has three classes");
  require(jobs >= 1, "jobs", "must be >= 1");
  require(prior.d_x.second >= 0 && static_cast<std::size_t>(prior.d_x.second) <= arch.d_x_max, "d_x",
          "upper bound exceeds d_x_max");
  prior.validate();
  arch.validate();
}

TrainConfig TrainConfig::from(const KvConfig& c) {
  TrainConfig t;
  t.setting = parse_setting(c.get_string("setting"));
  t.n_datasets = c.get_uint("n_datasets");
  t.max_epochs = c.get_uint("max_epochs");
  t.prior = prior_config_from(c);
  auto size = [&](const char* key, std::size_t& field) {
    if (c.has(key)) field = c.get_uint(key);
  };
  if (c.has("sample_size")) {
    const auto r = c.get_int_range("sample_size");
    if (r.first < 1) throw ConfigError("sample_size", "sample_size must be positive");
    t.sample_size = {static_cast<std::size_t>(r.first), static_cast<std::size_t>(r.second)};
  }
  size("n_queries", t.n_queries);
  size("query_pool", t.query_pool);
  size("batch_size", t.batch_size);
  size("patience", t.patience);
  size("jobs", t.jobs);
  size("d_model", t.arch.d_model);
  size("n_layers", t.arch.n_layers);
  size("n_heads", t.arch.n_heads);
  size("d_ff", t.arch.d_ff);
  size("n_classes", t.arch.n_classes);
  size("max_context", t.arch.max_context);
  size("d_x_max", t.arch.d_x_max);
  if (c.has("seed")) t.seed = c.get_uint("seed");
  t.learning_rate = c.double_or("learning_rate", t.learning_rate);
  t.weight_decay = c.double_or("weight_decay", t.weight_decay);
  t.val_fraction = c.double_or("val_fraction", t.val_fraction);
  if (c.has("thresholds")) t.thresholds = c.get_range("thresholds");
  if (c.has("resample_context")) t.resample_context = c.get_bool("resample_context");
  c.reject_unused();
  t.validate();
  return t;
}

KvConfig TrainConfig::to_kv() const {
  KvConfig c;
  c.set("setting", std::string(to_string(setting)));
  c.set("n_datasets", std::to_string(n_datasets));
  c.set("max_epochs", std::to_string(max_epochs));
  c.set("sample_size", std::to_string(sample_size.first) + ", " + std::to_string(sample_size.second));
  c.set("n_queries", std::to_string(n_queries));
  c.set("query_pool", std::to_string(query_pool));
  c.set("batch_size", std::to_string(batch_size));
  c.set("patience", std::to_string(patience));
  c.set("seed", std::to_string(seed));
  c.set("learning_rate", number(learning_rate));
  c.set("weight_decay", number(weight_decay));
  c.set("val_fraction", number(val_fraction));
  c.set("thresholds", number(thresholds.first) + ", " + number(thresholds.second));
  c.set("resample_context", resample_context ? "true" : "false");
  c.set("d_model", std::to_string(arch.d_model));
  c.set("n_layers", std::to_string(arch.n_layers));
  c.set("n_heads", std::to_string(arch.n_heads));
  c.set("d_ff", std::to_string(arch.d_ff));
  c.set("n_classes", std::to_string(arch.n_classes));
  c.set("max_context", std::to_string(arch.max_context));
  c.set("d_x_max", std::to_string(arch.d_x_max));
  write_prior_config(prior, c);
  return c;
}

int discretize_target(double value, std::pair<double, double> thresholds) {
  if (!(thresholds.first < thresholds.second)) throw PreconditionError("thresholds need lo < hi");
  if (value < thresholds.first) return 0;
  if (value > thresholds.second) return 2;
  return 1;
}

TrainingExample build_training_example(const TrainConfig& config, std::uint64_t seed) {
  const SettingSpec setting = SettingSpec::make(config.setting);
  std::optional<Scm> scm;
  for (int attempt = 0; attempt < kPriorRetryBudget && !scm; ++attempt) {
    try {
      scm = sample_scm(setting, config.prior, derive_seed(derive_seed(seed, "scm"), static_cast<std::uint64_t>(attempt)));
    } catch (const PriorRejectionError&) {
    }
  }
  if (!scm) throw PriorRejectionError("no admissible SCM for example seed " + std::to_string(seed));

  Rng size_rng(derive_seed(seed, "size"));
  const auto n = static_cast<std::size_t>(size_rng.uniform_int(static_cast<std::int64_t>(config.sample_size.first),
                                                               static_cast<std::int64_t>(config.sample_size.second)));
  const std::uint64_t row_seed = derive_seed(seed, "rows");

  TrainingExample ex;
  ex.seed = seed;
  ex.context = sample_observational(*scm, n, row_seed, 0);
  ex.target_scale = population_std(ex.context.outcomes());

  const std::size_t n_queries = std::max(config.n_queries, config.query_pool);
  Table exogenous = draw_exogenous(*scm, n_queries, row_seed, n);
  const auto& roles = scm->roles();
  if (roles.treatment_type == TreatmentType::binary) {
    const CounterfactualSample cf = counterfactual_from(*scm, std::move(exogenous), 0.0, 1.0);
    ex.queries = {cf.d_x, cf.x};
    ex.targets.resize(cf.n());
    for (std::size_t i = 0; i < cf.n(); ++i) ex.targets[i] = cf.y1[i] - cf.y0[i];
  } else {
    // CAPO: query tokens carry no treatment channel, so every query of an
    // example asks for y(a*) at one level a* = mean(A) + sd(A) of the
    // context, i.e. standardized treatment 1 in the model's input units.
    const auto& a_ctx = ex.context.treatments();
    double a_mean = 0.0;
    for (double v : a_ctx) a_mean += v;
    a_mean /= static_cast<double>(n);
    const double a_star = a_mean + population_std(a_ctx);
    const Scm intervened = scm->intervene(std::map<VarId, double>{{*roles.treatment, a_star}});
    const Table values = evaluate(intervened, exogenous);
    ex.queries.d_x = roles.covariates.size();
    for (std::size_t i = 0; i < n_queries; ++i) {
      for (VarId x : roles.covariates) ex.queries.x.push_back(values.at(i, x));
      ex.query_treatment.push_back(a_star);
      ex.targets.push_back(values.at(i, *roles.outcome));
    }
  }
  ex.target_center = roles.treatment_type == TreatmentType::binary
                            ? 0.0
                            : [&] {
                                double mean = 0.0;
                                for (double v : ex.context.outcomes()) mean += v;
                                return mean / static_cast<double>(n);
                              }();
  ex.classes.reserve(ex.targets.size());
  for (double t : ex.targets) {
    ex.classes.push_back(discretize_target((t - ex.target_center) / ex.target_scale, config.thresholds));
  }
  return ex;
}

std::string log_to_csv(const std::vector<EpochLog>& log, bool include_wall_time) {
  std::ostringstream out;
  out << "epoch,train_nll,val_nll" << (include_wall_time ? ",wall_seconds" : "") << '\n';
  out << std::setprecision(17);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.train_nll << ',' << e.val_nll;
    if (include_wall_time) out << ',' << std::setprecision(6) << e.wall_seconds << std::setprecision(17);
    out << '\n';
  }
  return out.str();
}

std::vector<double> bin_values_from(const std::vector<TrainingExample>& examples, std::size_t n_classes,
                                    std::pair<double, double> thresholds) {
  std::vector<double> sum(n_classes, 0.0);
  std::vector<std::size_t> count(n_classes, 0);
  for (const auto& ex : examples) {
    for (std::size_t i = 0; i < ex.targets.size(); ++i) {
      sum[ex.classes[i]] += (ex.targets[i] - ex.target_center) / ex.target_scale;
      ++count[ex.classes[i]];
    }
  }
  const std::vector<double> fallback{2.0 * thresholds.first, 0.5 * (thresholds.first + thresholds.second),
                                     2.0 * thresholds.second};
  std::vector<double> bins(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k) {
    bins[k] = count[k] ? sum[k] / static_cast<double>(count[k]) : fallback.at(k);
  }
  return bins;
}

double mean_nll(const PfnModel& model, const std::vector<TrainingExample>& examples) {
  double acc = 0.0;
  for (const auto& ex : examples) {
    acc += nll_loss(model.forward(ex.context, ex.queries), ex.classes).value;
  }
  return examples.empty() ? 0.0 : acc / static_cast<double>(examples.size());
}

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  // Fixed pool of examples; the last val_fraction of the pool validates.
  std::vector<TrainingExample> pool(config.n_datasets);
  parallel_for(config.n_datasets, config.jobs, [&](std::size_t i) {
    pool[i] = build_training_example(config, derive_seed(config.seed, static_cast<std::uint64_t>(i)));
  });
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(config.n_datasets))));
  const std::size_t n_train = config.n_datasets - n_val;
  // Fixed inputs: whole context, first n_queries queries.
  std::vector<PreparedInput> prepared(config.n_datasets);
  std::vector<std::vector<int>> fixed_classes(config.n_datasets);
  for (std::size_t i = 0; i < config.n_datasets; ++i) {
    std::vector<std::size_t> first(config.n_queries);
    std::iota(first.begin(), first.end(), std::size_t{0});
    const auto [queries, classes] = select_queries(pool[i], first);
    prepared[i] = prepare_input(config.arch, pool[i].context, queries);
    fixed_classes[i] = classes;
  }
  const std::vector<TrainingExample> train_examples(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));

  PfnModel model(config.arch, derive_seed(config.seed, "init"));
  AdamW optimizer(model.param_count(), config.learning_rate, config.weight_decay);
  std::vector<double> best_params(model.params().begin(), model.params().end());
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t bad_epochs = 0;
  std::vector<EpochLog> log;

  const std::size_t batch = std::min(config.batch_size, n_train);
  std::vector<std::vector<double>> grads(batch, std::vector<double>(model.param_count()));
  std::vector<double> losses(batch);
  std::vector<double> total(model.param_count());
  std::vector<std::size_t> order(n_train);
  const std::uint64_t resample_seed = derive_seed(config.seed, "resample");

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, "epoch"), epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double train_sum = 0.0;
    for (std::size_t b0 = 0; b0 < n_train; b0 += batch) {
      const std::size_t b = std::min(batch, n_train - b0);
      parallel_for(b, config.jobs, [&](std::size_t k) {
        std::fill(grads[k].begin(), grads[k].end(), 0.0);
        const std::size_t idx = order[b0 + k];
        if (!config.resample_context) {
          losses[k] = model.loss_gradient(prepared[idx], fixed_classes[idx], grads[k]);
          return;
        }
        const Dataset& full = pool[idx].context;
        Rng rng(derive_seed(resample_seed, epoch), idx);
        const auto m = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(std::min(config.sample_size.first, full.n())),
                            static_cast<std::int64_t>(full.n())));
        const auto [queries, classes] =
            select_queries(pool[idx], random_subset(rng, pool[idx].classes.size(), config.n_queries));
        const PreparedInput input = prepare_input(config.arch, full.subset(random_subset(rng, full.n(), m)), queries);
        losses[k] = model.loss_gradient(input, classes, grads[k]);
      });
      // Fixed summation order keeps results independent of `jobs`.
      std::fill(total.begin(), total.end(), 0.0);
      for (std::size_t k = 0; k < b; ++k) {
        if (!std::isfinite(losses[k])) {
          throw TrainingError(pool[order[b0 + k]].seed,
                              "non-finite loss for example seed " + std::to_string(pool[order[b0 + k]].seed));
        }
        train_sum += losses[k];
        for (std::size_t p = 0; p < total.size(); ++p) total[p] += grads[k][p];
      }
      for (double& g : total) g /= static_cast<double>(b);
      optimizer.step(model.params(), total);
    }

    std::vector<double> val_losses(n_val);
    parallel_for(n_val, config.jobs, [&](std::size_t k) {
      const std::size_t idx = n_train + k;
      val_losses[k] = nll_loss(model.forward(prepared[idx]), fixed_classes[idx]).value;
    });
    double val_sum = 0.0;
    for (double v : val_losses) val_sum += v;

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_nll = train_sum / static_cast<double>(n_train);
    entry.val_nll = val_sum / static_cast<double>(n_val);
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(entry.val_nll)) throw TrainingError(config.seed, "non-finite validation loss");
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.val_nll < best_val) {
      best_val = entry.val_nll;
      best_epoch = epoch;
      bad_epochs = 0;
      best_params.assign(model.params().begin(), model.params().end());
    } else if (++bad_epochs >= std::max<std::size_t>(config.patience, 1)) {
      break;
    }
  }

  TrainResult result;
  result.log = std::move(log);
  result.best_epoch = best_epoch;
  Checkpoint& ck = result.checkpoint;
  ck.arch = config.arch;
  ck.params = std::move(best_params);
  ck.thresholds = config.thresholds;
  ck.bin_values = bin_values_from(train_examples, config.arch.n_classes, config.thresholds);
  ck.metadata = {{"seed", config.seed},
                 {"epochs", result.log.size()},
                 {"best_epoch", best_epoch},
                 {"final_val_loss", best_val},
                 {"setting", std::string(to_string(config.setting))},
                 {"n_datasets", config.n_datasets},
                 {"config", config.to_kv().to_text()}};
  return result;
}

}  // namespace causalfm
