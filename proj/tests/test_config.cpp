#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "twode/config.hpp"
#include "twode/csv.hpp"
#include "twode/env.hpp"
#include "twode/experiment.hpp"

using namespace twode;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const char* kTinyDpConfig = R"(
[experiment]
recipe = dp-sweep
repetitions = 2
n_list = 6
master_seed = 11
methods = TWD

[env]
kind = DynamicProcess
horizon = 4

[train]
lr = 0.005
batch = 64
weight_decay = 0.0
embed_dim = 2
alpha = 0.5
ntn_out = 4
hidden = 8
max_epochs = 2
patience = 3
val_embed_steps = 1
val_embed_warmup = 1

[ope]
rollouts_per_traj = 3
)";

}  // namespace

TEST_CASE("config parser handles sections, comments and types") {
  const auto cfg = config::ConfigFile::parse_string(R"(
# comment
[alpha]
x = 1.5
name = hello
flag = true
list = 1, 2, 3

[beta]
x = 7
)");
  CHECK(cfg.get_double("alpha", "x") == 1.5);
  CHECK(cfg.get_string("alpha", "name") == "hello");
  CHECK(cfg.get_bool("alpha", "flag", false));
  CHECK(cfg.get_int("beta", "x") == 7);
  CHECK(cfg.get_int("beta", "missing", 9) == 9);
  const auto list = cfg.get_double_list("alpha", "list");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == 2.0);
  cfg.ensure_all_consumed();
}

TEST_CASE("config parser reports syntax errors with line numbers") {
  try {
    config::ConfigFile::parse_string("a = 1\nbroken line\n", "test.cfg");
    FAIL("expected a parse error");
  } catch (const config::ConfigError& e) {
    CHECK(std::string(e.what()).find("test.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(config::ConfigFile::parse_string("[unclosed\n"), config::ConfigError);
  CHECK_THROWS_AS(config::ConfigFile::parse_string("a = 1\na = 2\n"), config::ConfigError);
}

TEST_CASE("unknown keys are hard errors naming the key") {
  const auto cfg = config::ConfigFile::parse_string("[s]\nknown = 1\nmystery = 2\n");
  CHECK(cfg.get_int("s", "known") == 1);
  try {
    cfg.ensure_all_consumed();
    FAIL("expected an unknown-key error");
  } catch (const config::ConfigError& e) {
    CHECK(std::string(e.what()).find("mystery") != std::string::npos);
  }
}

TEST_CASE("minimal experiment config fills documented defaults") {
  const auto spec = experiment::parse_config_text(
      "[experiment]\nrecipe = dp-sweep\n\n[env]\nkind = DynamicProcess\n");
  CHECK(spec.env.horizon == 50);
  CHECK(spec.repetitions == 20);
  CHECK(spec.ope.n_rollouts_per_traj == 100);
  CHECK(spec.truth_rollouts == 10000);
  CHECK(spec.n_list == std::vector<int>{250, 500, 1000, 1500, 2000});
  CHECK(spec.targets == std::vector<std::string>{"A", "B"});
  // full default search ranges: lr x batch x decay x embed x alpha
  CHECK(spec.grid.size() == 2 * 5 * 2 * 3 * 4);

  const auto tumor = experiment::parse_config_text(
      "[experiment]\nrecipe = tumor-sweep\n\n[env]\nkind = TumorGrowth\n");
  CHECK(tumor.env.horizon == 60);
}

TEST_CASE("config validation rejects bad field values and cross-field mixes") {
  CHECK_THROWS_AS(experiment::parse_config_text(
                      "[experiment]\nrecipe = dp-sweep\n\n[env]\nkind = "
                      "DynamicProcess\ngamma = 1.5\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(experiment::parse_config_text(
                      "[experiment]\nrecipe = tumor-sweep\n\n[env]\nkind = Linear\n"),
                  config::ConfigError);
  CHECK_THROWS_AS(experiment::parse_config_text(
                      "[experiment]\nrecipe = dp-sweep\nmethods = \n\n[env]\nkind = "
                      "DynamicProcess\n"),
                  config::ConfigError);
  CHECK_THROWS_AS(experiment::parse_config_text(
                      "[experiment]\nrecipe = dp-sweep\nbogus = 1\n\n[env]\nkind = "
                      "DynamicProcess\n"),
                  config::ConfigError);
}

TEST_CASE("cell seeds are pure functions of their coordinates") {
  const auto s = experiment::cell_seed(7, 100, 0.3, "TWD", 4);
  CHECK(s == experiment::cell_seed(7, 100, 0.3, "TWD", 4));
  CHECK(s != experiment::cell_seed(8, 100, 0.3, "TWD", 4));
  CHECK(s != experiment::cell_seed(7, 200, 0.3, "TWD", 4));
  CHECK(s != experiment::cell_seed(7, 100, 0.7, "TWD", 4));
  CHECK(s != experiment::cell_seed(7, 100, 0.3, "OWD-NI", 4));
  CHECK(s != experiment::cell_seed(7, 100, 0.3, "TWD", 5));
}

TEST_CASE("experiment run emits a complete manifest") {
  auto spec = experiment::parse_config_text(kTinyDpConfig);
  spec.truth_rollouts = 50;
  spec.output_dir = "cfgtest_out";
  fs::remove_all(spec.output_dir);
  const auto manifest = experiment::run(spec);
  CHECK(manifest.failed_cells.empty());
  CHECK(manifest.cell_seeds.size() == 2);  // 1 N x 1 method x 2 reps

  // every emitted file is listed with a valid hash
  const auto problems = experiment::verify_manifest(spec.output_dir);
  for (const auto& p : problems) CAPTURE(p);
  CHECK(problems.empty());

  // tampering is detected
  {
    std::ofstream out(fs::path(spec.output_dir) / "runs.csv", std::ios::app);
    out << "tampered\n";
  }
  CHECK_FALSE(experiment::verify_manifest(spec.output_dir).empty());
  fs::remove_all(spec.output_dir);
}

TEST_CASE("failed cells are logged and the run continues") {
  auto spec = experiment::parse_config_text(kTinyDpConfig);
  spec.truth_rollouts = 50;
  spec.output_dir = "cfgtest_fail";
  // an absurd step size overflows the quadratic loss term into infinity
  spec.grid[0].lr = 1e150;
  fs::remove_all(spec.output_dir);
  const auto manifest = experiment::run(spec);
  CHECK(manifest.failed_cells.size() == 2);
  CHECK(manifest.failed_cells.front().find("diverged") != std::string::npos);
  // result files still exist (headers only) and the manifest stays complete
  CHECK(experiment::verify_manifest(spec.output_dir).empty());
  fs::remove_all(spec.output_dir);
}

TEST_CASE("deterministic runs are byte-identical") {
  auto spec = experiment::parse_config_text(kTinyDpConfig);
  spec.truth_rollouts = 50;
  spec.deterministic = true;

  spec.output_dir = "cfgtest_a";
  fs::remove_all(spec.output_dir);
  experiment::run(spec);
  spec.output_dir = "cfgtest_b";
  fs::remove_all(spec.output_dir);
  experiment::run(spec);

  CHECK(slurp("cfgtest_a/runs.csv") == slurp("cfgtest_b/runs.csv"));
  CHECK(slurp("cfgtest_a/aggregate.csv") == slurp("cfgtest_b/aggregate.csv"));
  CHECK(!slurp("cfgtest_a/runs.csv").empty());
  fs::remove_all("cfgtest_a");
  fs::remove_all("cfgtest_b");
}

TEST_CASE("linear-props recipe emits the replication table") {
  auto spec = experiment::parse_config_text(R"(
[experiment]
recipe = linear-props
repetitions = 2
n_list = 20, 30
master_seed = 5
truth_rollouts = 200

[env]
kind = Linear
horizon = 8

[ope]
linear_rollouts = 5
)");
  spec.output_dir = "cfgtest_linear";
  fs::remove_all(spec.output_dir);
  const auto manifest = experiment::run(spec);
  CHECK(manifest.failed_cells.empty());
  const std::string table = slurp("cfgtest_linear/linear_props.csv");
  CHECK(table.rfind("seed,assumption,N,T,train_mse,theory_mse,ope_mse\n", 0) == 0);
  // 2 N values x 3 assumptions x 2 reps = 12 data rows
  CHECK(std::count(table.begin(), table.end(), '\n') == 13);
  fs::remove_all(spec.output_dir);
}

TEST_CASE("dataset files round-trip through the CSV format") {
  EnvConfig cfg;
  cfg.env_kind = EnvKind::TumorGrowth;
  cfg.n_trajectories = 4;
  cfg.horizon = 6;
  cfg.gamma = 0.7;
  cfg.seed = 3;
  auto [data, latents] = env::gen_tumor(cfg, PolicySpec::behavior());

  fs::create_directories("cfgtest_csv");
  csv::write_dataset("cfgtest_csv/dataset.csv", data);
  csv::write_latents("cfgtest_csv", latents);
  const Dataset loaded = csv::load_dataset("cfgtest_csv/dataset.csv");

  CHECK(loaded.n_traj == data.n_traj);
  CHECK(loaded.horizon == data.horizon);
  CHECK(loaded.obs_dim == 2);
  CHECK(loaded.n_action_components == 2);
  CHECK(loaded.observations == data.observations);  // 17 digits round-trip exactly
  CHECK(loaded.actions == data.actions);
  CHECK(loaded.rewards == data.rewards);
  CHECK(loaded.initial_obs == data.initial_obs);
  // the final transition target is not representable in the grid
  for (int i = 0; i < loaded.n_traj; ++i) {
    for (int t = 0; t + 1 < loaded.horizon; ++t) {
      CHECK(loaded.has_next(i, t));
      CHECK(loaded.next_observations.row(loaded.row(i, t)) ==
            data.next_observations.row(data.row(i, t)));
    }
    CHECK_FALSE(loaded.has_next(i, loaded.horizon - 1));
  }
  CHECK(fs::exists("cfgtest_csv/latents_tumor.csv"));
  fs::remove_all("cfgtest_csv");
}
