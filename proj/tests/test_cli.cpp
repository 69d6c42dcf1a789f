#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "causalfm/dataset.hpp"
#include "causalfm/manifest.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "causalfm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run(const std::string& exe, const std::string& args) {
  const fs::path log = scratch() / "stdout.txt";
  const std::string cmd = "\"" + exe + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = causalfm::read_file(log.string());
  return r;
}

RunResult cli(const std::string& args) { return run(CAUSALFM_EXE, args); }

std::string slurp(const fs::path& p) { return causalfm::read_file(p.string()); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kTinyTrain =
    "setting = back_door\nn_datasets = 8\nmax_epochs = 1\nseed = 3\n"
    "sample_size = 16, 32\nn_queries = 8\nquery_pool = 8\nbatch_size = 4\nval_fraction = 0.25\n"
    "d_model = 8\nn_layers = 1\nn_heads = 2\nd_ff = 16\nmax_context = 64\nd_x = 2, 3\n";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("--no-such-flag").code, 2);
  EXPECT_EQ(cli("gen-data --setting back_door").code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("--version").code, 0);
}

TEST(Cli, VerifyPassesWithoutMonteCarlo) {
  const RunResult r = cli("verify --mc-n 100");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("iv_equivalent_construction"), std::string::npos);
  EXPECT_NE(r.out.find("SKIP"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

#ifdef CAUSALFM_MUTANT_EXE
TEST(Cli, VerifyCatchesSignFlippedBias) {
  const RunResult r = run(CAUSALFM_MUTANT_EXE, "verify --mc-n 100");
  EXPECT_EQ(r.code, 1) << r.out;
  const auto line = r.out.find("backdoor_bias_analytic");
  ASSERT_NE(line, std::string::npos) << r.out;
  EXPECT_NE(r.out.find("FAIL", line), std::string::npos);
}
#endif

TEST(Cli, GenDataIsDeterministicAndWritesMediator) {
  const fs::path a = scratch() / "gen_a", b = scratch() / "gen_b";
  ASSERT_EQ(cli("--seed 5 gen-data --setting front_door --n-datasets 2 --rows 40 --out " + a.string()).code, 0);
  ASSERT_EQ(cli("--seed 5 gen-data --setting front_door --n-datasets 2 --rows 40 --out " + b.string()).code, 0);
  for (const char* f : {"dataset_0000.jsonl", "dataset_0001.jsonl", "targets_0001.jsonl"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const causalfm::Dataset d = causalfm::load_jsonl((a / "dataset_0000.jsonl").string());
  EXPECT_EQ(d.n(), 40u);
  EXPECT_EQ(d.d_aux(), 1u);
  EXPECT_NE(std::find(d.schema().columns.begin(), d.schema().columns.end(), "M"), d.schema().columns.end());
  EXPECT_NE(slurp(a / "targets_0000.jsonl").find("\"ite\""), std::string::npos);
  EXPECT_EQ(cli("--check-manifest " + a.string()).code, 0);
  write(a / "dataset_0001.jsonl", "tampered\n");
  EXPECT_EQ(cli("--check-manifest " + a.string()).code, 1);
}

TEST(Cli, GenDataEnvironmentSeedAndCapoTargets) {
  const fs::path a = scratch() / "gen_env", b = scratch() / "gen_flag";
  ASSERT_EQ(std::system(("CAUSALFM_SEED=8 \"" + std::string(CAUSALFM_EXE) +
                         "\" gen-data --setting iv --n-datasets 1 --rows 30 --out " + a.string() + " > /dev/null")
                            .c_str()),
            0);
  ASSERT_EQ(cli("--seed 8 gen-data --setting iv --n-datasets 1 --rows 30 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "dataset_0000.jsonl"), slurp(b / "dataset_0000.jsonl"));
  EXPECT_NE(slurp(a / "targets_0000.jsonl").find("\"capo\""), std::string::npos);
}

TEST(Cli, BadConfigsNameTheKey) {
  const fs::path cfg = scratch() / "bad_prior.cfg";
  write(cfg, "edge_drop_prob = 3\n");
  const RunResult r = cli("gen-data --setting back_door --prior-config " + cfg.string() + " --n-datasets 1 --out " +
                          (scratch() / "bad").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("edge_drop_prob"), std::string::npos) << r.out;
  const fs::path train_cfg = scratch() / "bad_train.cfg";
  write(train_cfg, "setting = back_door\nmax_epochs = 1\n");
  const RunResult t = cli("train --config " + train_cfg.string() + " --out " + (scratch() / "x.ckpt").string());
  EXPECT_EQ(t.code, 2);
  EXPECT_NE(t.out.find("n_datasets"), std::string::npos) << t.out;
  EXPECT_EQ(cli("gen-data --setting back_door --prior-config /nonexistent.cfg --n-datasets 1 --out " +
                (scratch() / "bad").string())
                .code,
            3);
}

TEST(Cli, TrainEvalPredictRoundTrip) {
  const fs::path cfg = scratch() / "tiny.cfg";
  write(cfg, kTinyTrain);
  const fs::path ckpt = scratch() / "model" / "tiny.ckpt";
  const RunResult t = cli("train --config " + cfg.string() + " --out " + ckpt.string());
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_EQ(slurp(scratch() / "model" / "tiny.log.csv").substr(0, 23), "epoch,train_nll,val_nll");
  EXPECT_EQ(cli("--check-manifest " + (scratch() / "model").string()).code, 0);

  const fs::path suite = scratch() / "suite.cfg";
  write(suite, "id = L\nkind = linear\nseed = 1\nn = 80\nd_x = 2\ntau = 1, 0\n");
  const fs::path e1 = scratch() / "eval1", e2 = scratch() / "eval2";
  const std::string eval_args = "eval --checkpoint " + ckpt.string() + " --suite " + suite.string() +
                                " --methods oracle,t_ridge --seeds 0,1 --out ";
  ASSERT_EQ(cli(eval_args + e1.string()).code, 0);
  ASSERT_EQ(cli(eval_args + e2.string()).code, 0);
  EXPECT_EQ(slurp(e1 / "runs.csv"), slurp(e2 / "runs.csv"));
  const std::string agg = slurp(e1 / "aggregate.csv");
  EXPECT_NE(agg.find("L,oracle,0,0"), std::string::npos) << agg;
  EXPECT_NE(agg.find("L,causalfm,"), std::string::npos) << agg;

  const fs::path gen = scratch() / "ctx";
  ASSERT_EQ(cli("gen-data --setting back_door --prior-config " + cfg.string() + " --n-datasets 1 --rows 20 --out " +
                gen.string())
                .code,
            2);  // training keys are not prior keys
  const fs::path prior = scratch() / "prior.cfg";
  write(prior, "d_x = 2, 2\n");
  ASSERT_EQ(cli("gen-data --setting back_door --prior-config " + prior.string() +
                " --n-datasets 1 --rows 20 --out " + gen.string())
                .code,
            0);
  const fs::path queries = scratch() / "q.csv";
  write(queries, "x1,x2\n0.0,1.0\n-1.5,2.0\n");
  const fs::path pred = scratch() / "pred.csv";
  const RunResult p = cli("predict --checkpoint " + ckpt.string() + " --context " + (gen / "dataset_0000.jsonl").string() +
                          " --queries " + queries.string() + " --out " + pred.string());
  ASSERT_EQ(p.code, 0) << p.out;
  std::istringstream lines(slurp(pred));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "query,cate,p0,p1,p2");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 2);

  write(queries, "x1\n0.0\n");
  EXPECT_EQ(cli("predict --checkpoint " + ckpt.string() + " --context " + (gen / "dataset_0000.jsonl").string() +
                " --queries " + queries.string() + " --out " + pred.string())
                .code,
            3);
}
