#include "causalfm/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "causalfm/benchmark.hpp"
#include "causalfm/checkpoint.hpp"
#include "causalfm/constraints.hpp"
#include "causalfm/error.hpp"
#include "causalfm/manifest.hpp"
#include "causalfm/metrics.hpp"
#include "causalfm/parallel.hpp"
#include "causalfm/prior.hpp"
#include "causalfm/sampling.hpp"
#include "causalfm/trainer.hpp"
#include "causalfm/verify.hpp"

namespace causalfm::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string parent_dir(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  return p.empty() ? std::string(".") : p.string();
}

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

std::string index_name(const char* stem, std::size_t i, const char* ext) {
  std::ostringstream out;
  out << stem << '_' << std::setw(4) << std::setfill('0') << i << ext;
  return out.str();
}

Scm sample_admissible(const SettingSpec& setting, const BnnPriorConfig& prior, std::uint64_t seed,
                      std::uint64_t& used_seed) {
  for (int attempt = 0; attempt < kPriorRetryBudget; ++attempt) {
    used_seed = derive_seed(derive_seed(seed, "scm"), static_cast<std::uint64_t>(attempt));
    try {
      return sample_scm(setting, prior, used_seed);
    } catch (const PriorRejectionError&) {
    }
  }
  throw PriorRejectionError("no admissible SCM for dataset seed " + std::to_string(seed));
}

std::string csv_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

// CSV with a header row and d numeric columns.
QuerySet read_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("query file " + path + " has no header");
  const auto d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + (line.empty() ? 0 : 1));
  QuerySet q;
  q.d_x = d;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream fields(line);
    std::string field;
    std::size_t count = 0;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        q.x.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        throw SchemaError("query file line " + std::to_string(line_no) + ": non-numeric field '" + field + "'");
      }
      ++count;
    }
    if (count != d) throw SchemaError("query file line " + std::to_string(line_no) + ": expected " + std::to_string(d) + " fields");
  }
  return q;
}

}  // namespace

int report_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const SchemaError*>(&e)) return kIo;
  if (dynamic_cast<const std::ios_base::failure*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
  return kFailure;
}

int cmd_check_manifest(const std::string& dir) {
  const ManifestCheck result = check_manifest(dir);
  for (const auto& p : result.problems) std::cerr << "manifest: " << p << '\n';
  std::cout << "manifest " << dir << ": " << (result.ok ? "ok" : "MISMATCH") << '\n';
  return result.ok ? kOk : kFailure;
}

int cmd_verify(const Globals& g, const VerifyArgs& args) {
  VerifyOptions options;
  options.mc_n = args.mc_n;
  options.seed = g.seed.value_or(0);
  const auto results = run_verify(options);
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool ok = true;
  for (const auto& r : results) {
    std::cout << std::left << std::setw(static_cast<int>(width) + 2) << r.name << to_string(r.status);
    if (!r.detail.empty()) std::cout << "  " << r.detail;
    std::cout << '\n';
    ok = ok && r.status != CheckStatus::fail;
  }
  std::cout << (ok ? "all checks passed" : "verification FAILED") << '\n';
  return ok ? kOk : kFailure;
}

int cmd_gen_data(const Globals& g, const GenDataArgs& args) {
  const auto start = Clock::now();
  const Setting setting = parse_setting(args.setting);
  if (setting == Setting::custom) throw ConfigError("setting", "gen-data needs back_door, front_door or iv");
  KvConfig prior_kv = args.prior_config.empty() ? KvConfig() : KvConfig::load(args.prior_config);
  const BnnPriorConfig prior = prior_config_from(prior_kv);
  if (prior_kv.has("setting") && parse_setting(prior_kv.get_string("setting")) != setting) {
    throw ConfigError("setting", "prior config setting disagrees with --setting");
  }
  prior_kv.reject_unused();
  const std::uint64_t seed = g.seed.value_or(0);
  ensure_dir(args.out_dir);

  KvConfig resolved;
  write_prior_config(prior, resolved);
  resolved.set("setting", std::string(to_string(setting)));
  resolved.set("n_datasets", std::to_string(args.n_datasets));
  resolved.set("rows", std::to_string(args.rows));
  resolved.set("seed", std::to_string(seed));

  const SettingSpec spec = SettingSpec::make(setting);
  parallel_for(args.n_datasets, g.jobs, [&](std::size_t i) {
    const std::uint64_t ds_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    std::uint64_t scm_seed = 0;
    const Scm scm = sample_admissible(spec, prior, ds_seed, scm_seed);
    const Table exo = draw_exogenous(scm, args.rows, derive_seed(ds_seed, "rows"));
    Dataset data = to_dataset(scm, evaluate(scm, exo));
    data.schema().provenance = {{"dataset_index", i}, {"seed", seed}, {"scm_seed", scm_seed},
                                {"prior_config", resolved.to_text()}};

    std::ostringstream targets;
    nlohmann::json header;
    if (scm.roles().treatment_type == TreatmentType::binary) {
      const CounterfactualSample cf = counterfactual_from(scm, exo, 0.0, 1.0);
      header = {{"kind", "ite"}, {"a0", 0.0}, {"a1", 1.0}, {"n", cf.n()}, {"columns", {"y0", "y1"}}};
      targets << header.dump() << '\n';
      for (std::size_t r = 0; r < cf.n(); ++r) targets << nlohmann::json::array({cf.y0[r], cf.y1[r]}).dump() << '\n';
    } else {
      const auto& a = data.treatments();
      const double a_star = mean(a) + population_std(a);
      const Table values = evaluate(scm.intervene(std::map<VarId, double>{{*scm.roles().treatment, a_star}}), exo);
      header = {{"kind", "capo"}, {"a", a_star}, {"n", args.rows}, {"columns", {"y_a"}}};
      targets << header.dump() << '\n';
      for (std::size_t r = 0; r < args.rows; ++r) {
        targets << nlohmann::json::array({values.at(r, *scm.roles().outcome)}).dump() << '\n';
      }
    }
    std::ostringstream rows;
    write_jsonl(data, rows);
    write_file_atomic((fs::path(args.out_dir) / index_name("dataset", i, ".jsonl")).string(), rows.str());
    write_file_atomic((fs::path(args.out_dir) / index_name("targets", i, ".jsonl")).string(), targets.str());
  });

  RunManifest manifest;
  manifest.command = "gen-data";
  manifest.config = resolved.to_text();
  manifest.seed = seed;
  if (!args.prior_config.empty()) manifest.add_file(args.out_dir, absolute(args.prior_config), "input");
  for (std::size_t i = 0; i < args.n_datasets; ++i) {
    manifest.add_file(args.out_dir, index_name("dataset", i, ".jsonl"), "output");
    manifest.add_file(args.out_dir, index_name("targets", i, ".jsonl"), "output");
  }
  manifest.wall_seconds = seconds_since(start);
  manifest.write(args.out_dir);
  std::cout << "wrote " << args.n_datasets << " datasets to " << args.out_dir << '\n';
  return kOk;
}

int cmd_train(const Globals& g, const TrainArgs& args) {
  const auto start = Clock::now();
  KvConfig kv = KvConfig::load(args.config);
  if (g.seed) kv.set("seed", std::to_string(*g.seed));
  kv.set("jobs", std::to_string(g.jobs));
  const TrainConfig config = TrainConfig::from(kv);

  const std::string dir = parent_dir(args.out);
  ensure_dir(dir);
  const TrainResult result = train(config, [](const EpochLog& e) {
    std::cout << "epoch " << e.epoch << "  train_nll " << std::setprecision(5) << e.train_nll << "  val_nll "
              << e.val_nll << '\n';
  });
  result.checkpoint.save(args.out);
  const std::string log_path = (fs::path(dir) / (fs::path(args.out).stem().string() + ".log.csv")).string();
  write_file_atomic(log_path, log_to_csv(result.log));

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = config.to_kv().to_text();
  manifest.seed = config.seed;
  manifest.add_file(dir, absolute(args.config), "input");
  manifest.add_file(dir, fs::path(args.out).filename().string(), "output");
  manifest.add_file(dir, fs::path(log_path).filename().string(), "output");
  manifest.wall_seconds = seconds_since(start);
  manifest.write(dir);
  std::cout << "best epoch " << result.best_epoch << ", val_nll " << result.checkpoint.metadata["final_val_loss"]
            << "; checkpoint " << args.out << '\n';
  return kOk;
}

int cmd_eval(const Globals& g, const EvalArgs& args) {
  const auto start = Clock::now();
  const auto suite = load_suite(args.suite);
  std::vector<Method> methods;
  const auto names = args.methods.empty() ? builtin_method_names() : args.methods;
  for (const auto& name : names) methods.push_back(builtin_method(name));
  if (!args.checkpoint.empty()) {
    methods.push_back(causalfm_method(std::make_shared<const Checkpoint>(Checkpoint::load(args.checkpoint))));
  }
  std::vector<std::uint64_t> seeds = args.seeds;
  if (seeds.empty()) {
    for (std::uint64_t k = 0; k < 5; ++k) seeds.push_back(g.seed.value_or(0) + k);
  }
  ensure_dir(args.out_dir);
  const BenchmarkResult result = run_benchmark(suite, methods, seeds, g.jobs);
  write_file_atomic((fs::path(args.out_dir) / "runs.csv").string(), result.runs_csv());
  write_file_atomic((fs::path(args.out_dir) / "aggregate.csv").string(), result.aggregate_csv());
  for (const auto& r : result.runs) {
    if (!r.pehe) std::cerr << "warning: " << r.dataset_id << '/' << r.method << '/' << r.seed << ": " << r.error << '\n';
  }

  RunManifest manifest;
  manifest.command = "eval";
  std::ostringstream config;
  config << "suite = " << absolute(args.suite) << "\nmethods = ";
  for (std::size_t k = 0; k < methods.size(); ++k) config << (k ? ", " : "") << methods[k].name;
  config << "\nseeds = ";
  for (std::size_t k = 0; k < seeds.size(); ++k) config << (k ? ", " : "") << seeds[k];
  config << '\n';
  manifest.config = config.str();
  manifest.seed = g.seed.value_or(0);
  if (!args.checkpoint.empty()) manifest.add_file(args.out_dir, absolute(args.checkpoint), "input");
  manifest.add_file(args.out_dir, "runs.csv", "output");
  manifest.add_file(args.out_dir, "aggregate.csv", "output");
  manifest.wall_seconds = seconds_since(start);
  manifest.write(args.out_dir);
  std::cout << result.aggregate_csv();
  return kOk;
}

int cmd_predict(const Globals& g, const PredictArgs& args) {
  const auto start = Clock::now();
  const Checkpoint ck = Checkpoint::load(args.checkpoint);
  const Dataset context = load_jsonl(args.context);
  const QuerySet queries = read_queries(args.queries);
  if (queries.d_x != context.d_x()) {
    throw SchemaError("query file has " + std::to_string(queries.d_x) + " columns, context has " +
                      std::to_string(context.d_x()) + " covariates");
  }
  if (context.d_x() > ck.arch.d_x_max) {
    throw SchemaError("context has " + std::to_string(context.d_x()) + " covariates; checkpoint supports " +
                      std::to_string(ck.arch.d_x_max));
  }
  const PfnModel model = ck.model();
  const PreparedInput prepared = prepare_input(ck.arch, context, queries);
  const RowMatrix probs = model.forward(prepared);

  std::ostringstream out;
  out << "query,cate";
  for (Eigen::Index k = 0; k < probs.cols(); ++k) out << ",p" << k;
  out << '\n';
  for (Eigen::Index q = 0; q < probs.rows(); ++q) {
    const std::span<const double> row(probs.data() + q * probs.cols(), static_cast<std::size_t>(probs.cols()));
    const CatePrediction p = predict_cate(row, ck.bin_values);
    out << q << ',' << csv_number(p.point * prepared.y_std);
    for (double v : p.class_probs) out << ',' << csv_number(v);
    out << '\n';
  }
  const std::string dir = parent_dir(args.out);
  ensure_dir(dir);
  write_file_atomic(args.out, out.str());

  RunManifest manifest;
  manifest.command = "predict";
  manifest.config = "checkpoint = " + absolute(args.checkpoint) + "\ncontext = " + absolute(args.context) +
                    "\nqueries = " + absolute(args.queries) + "\n";
  manifest.seed = g.seed.value_or(0);
  manifest.add_file(dir, absolute(args.checkpoint), "input");
  manifest.add_file(dir, absolute(args.context), "input");
  manifest.add_file(dir, absolute(args.queries), "input");
  manifest.add_file(dir, fs::path(args.out).filename().string(), "output");
  manifest.wall_seconds = seconds_since(start);
  manifest.write(dir);
  return kOk;
}

}  // namespace causalfm::cli
