#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace causalfm::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3 };

struct Globals {
  std::optional<std::uint64_t> seed;  // --seed, else CAUSALFM_SEED
  std::size_t jobs = 1;
};

struct VerifyArgs {
  std::size_t mc_n = 1'000'000;
};

struct GenDataArgs {
  std::string setting;
  std::string prior_config;
  std::size_t n_datasets = 0;
  std::size_t rows = 512;
  std::string out_dir;
};

struct TrainArgs {
  std::string config;
  std::string out;
};

struct EvalArgs {
  std::string checkpoint;
  std::string suite;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
};

struct PredictArgs {
  std::string checkpoint;
  std::string context;
  std::string queries;
  std::string out;
};

int cmd_verify(const Globals& g, const VerifyArgs& args);
int cmd_gen_data(const Globals& g, const GenDataArgs& args);
int cmd_train(const Globals& g, const TrainArgs& args);
int cmd_eval(const Globals& g, const EvalArgs& args);
int cmd_predict(const Globals& g, const PredictArgs& args);
int cmd_check_manifest(const std::string& dir);

// Maps library exceptions onto exit codes, printing the message to stderr.
int report_error(const std::exception& e);

}  // namespace causalfm::cli
