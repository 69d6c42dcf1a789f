#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>

#include "causalfm/commands.hpp"

namespace cli = causalfm::cli;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* text = std::getenv("CAUSALFM_SEED");
  if (!text || !*text) return std::nullopt;
  std::uint64_t v = 0;
  const std::string_view s(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw CLI::ValidationError("CAUSALFM_SEED", "must be a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CausalFM: SCM priors, linear-IV oracles and an in-context causal effect model"};
  app.set_version_flag("--version", "causalfm 0.1.0");

  cli::Globals globals;
  std::uint64_t seed = 0;
  std::string manifest_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Global seed (fallback: CAUSALFM_SEED)");
  app.add_option("--jobs", globals.jobs, "Maximum worker threads")->check(CLI::PositiveNumber);
  app.add_option("--check-manifest", manifest_dir, "Revalidate the manifest digests of a directory");
  app.require_subcommand(0, 1);

  cli::VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the linear-IV, identification and SCM oracle suite");
  verify_cmd->add_option("--mc-n", verify.mc_n, "Monte-Carlo sample size (checks skipped below 10000)");

  cli::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Sample prior datasets with interventional targets");
  gen_cmd->add_option("--setting", gen.setting, "back_door | front_door | iv")->required();
  gen_cmd->add_option("--prior-config", gen.prior_config, "key = value prior configuration");
  gen_cmd->add_option("--n-datasets", gen.n_datasets, "Number of datasets")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--rows", gen.rows, "Rows per dataset")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();

  cli::TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model on prior samples");
  train_cmd->add_option("--config", train.config, "Training configuration")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();

  cli::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Benchmark methods on a dataset suite");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint evaluated as method 'causalfm'");
  eval_cmd->add_option("--suite", eval.suite, "Suite directory (*.cfg) or a single spec file")->required();
  eval_cmd->add_option("--methods", eval.methods, "Baselines (comma separated)")->delimiter(',');
  eval_cmd->add_option("--seeds", eval.seeds, "Split seeds (comma separated)")->delimiter(',');
  eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();

  cli::PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict CATE for query rows given a context dataset");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Checkpoint")->required();
  predict_cmd->add_option("--context", predict.context, "Context dataset (JSON lines)")->required();
  predict_cmd->add_option("--queries", predict.queries, "Query covariates (CSV with header)")->required();
  predict_cmd->add_option("--out", predict.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
    globals.seed = *seed_opt ? std::optional<std::uint64_t>(seed) : env_seed();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (!manifest_dir.empty()) {
      const int code = cli::cmd_check_manifest(manifest_dir);
      if (code != cli::kOk || app.get_subcommands().empty()) return code;
    }
    if (*verify_cmd) return cli::cmd_verify(globals, verify);
    if (*gen_cmd) return cli::cmd_gen_data(globals, gen);
    if (*train_cmd) return cli::cmd_train(globals, train);
    if (*eval_cmd) return cli::cmd_eval(globals, eval);
    if (*predict_cmd) return cli::cmd_predict(globals, predict);
  } catch (const std::exception& e) {
    return cli::report_error(e);
  }
  std::cerr << app.help();
  return cli::kUsage;
}
