// twode: experiment driver for the two-way deconfounder.
//
// Subcommands:
//   gen    generate a dataset and its hidden latent table
//   train  fit the deconfounder model on a dataset
//   eval   estimate a target policy value from a checkpoint
//   run    execute an experiment recipe end to end
//   check  validate a config file and/or verify an output manifest

#include <CLI11.hpp>

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "twode/ablate.hpp"
#include "twode/config.hpp"
#include "twode/csv.hpp"
#include "twode/env.hpp"
#include "twode/experiment.hpp"
#include "twode/version.hpp"

namespace fs = std::filesystem;
using namespace twode;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
};

int cmd_gen(const CommonArgs& args, int n_override, const std::string& policy_name) {
  auto spec = experiment::parse_config(args.config_path);
  EnvConfig cfg = spec.env;
  cfg.n_trajectories = n_override > 0 ? n_override : spec.n_list.front();
  cfg.seed = args.seed;
  const PolicySpec policy = policy_name == "behavior"
                                ? PolicySpec::behavior()
                                : policy_from_string(policy_name);
  auto [data, latents] = env::generate(cfg, policy);

  fs::create_directories(args.out_dir);
  csv::write_dataset(args.out_dir + "/dataset.csv", data);
  csv::write_latents(args.out_dir, latents);

  experiment::RunManifest manifest;
  manifest.version = kVersion;
  manifest.recipe = "gen";
  manifest.spec_hash = csv::text_hash(spec.canonical_text());
  manifest.master_seed = args.seed;
  manifest.cell_seeds = {args.seed};
  std::vector<std::string> files = {"dataset.csv", "latents_u.csv", "latents_w.csv"};
  if (latents.has_tumor_aux()) files.push_back("latents_tumor.csv");
  for (const auto& f : files)
    manifest.files.emplace_back(f, csv::file_hash(args.out_dir + "/" + f));
  manifest.write(args.out_dir + "/manifest.json");
  std::cout << "wrote " << data.n_traj << " trajectories x " << data.horizon
            << " steps to " << args.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args, int n_override, const std::string& variant_name,
              const std::string& data_path) {
  auto spec = experiment::parse_config(args.config_path);
  EnvConfig cfg = spec.env;
  cfg.n_trajectories = n_override > 0 ? n_override : spec.n_list.front();
  cfg.seed = RngStream::derive_key(args.seed, 1);

  Dataset data;
  if (!data_path.empty()) {
    data = csv::load_dataset(data_path);
    cfg.n_trajectories = data.n_traj;
    cfg.horizon = data.horizon;
  } else {
    data = env::generate(cfg, PolicySpec::behavior()).first;
  }

  std::vector<train::HyperParams> grid = spec.grid;
  for (auto& h : grid) h.seed = RngStream::derive_key(args.seed, 2);
  const auto kind = ablate::variant_from_string(variant_name);
  const auto report = train::select_and_refit(data, grid, ablate::make_variant(kind));

  fs::create_directories(args.out_dir);
  ntn::save_checkpoint(report.best_params, args.out_dir + "/checkpoint.bin");
  {
    std::ofstream curve(args.out_dir + "/curve.csv", std::ios::trunc);
    curve << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < report.curve.size(); ++e)
      curve << e << ',' << csv::format_double(report.curve[e].first) << ','
            << csv::format_double(report.curve[e].second) << '\n';
  }
  {
    nlohmann::json j;
    j["variant"] = ablate::to_string(kind);
    j["best_val_loss"] = report.best_val_loss;
    j["best_epoch"] = report.best_epoch;
    j["grid_index"] = report.grid_index;
    j["n_updates"] = report.n_updates;
    j["hypers"] = {{"lr", report.chosen_hypers.lr},
                   {"batch_size", report.chosen_hypers.batch_size},
                   {"weight_decay", report.chosen_hypers.weight_decay},
                   {"embed_dim", report.chosen_hypers.embed_dim},
                   {"loss_alpha", report.chosen_hypers.loss_alpha},
                   {"ntn_slices", report.chosen_hypers.ntn_slices},
                   {"ntn_out", report.chosen_hypers.ntn_out},
                   {"mlp_hidden", report.chosen_hypers.mlp_hidden}};
    std::ofstream out(args.out_dir + "/train_report.json", std::ios::trunc);
    out << j.dump(2) << '\n';
  }
  std::cout << "best validation loss " << report.best_val_loss << " (epoch "
            << report.best_epoch << "), checkpoint written to " << args.out_dir << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path,
             const std::string& data_path, const std::string& target_name,
             int truth_rollouts) {
  auto spec = experiment::parse_config(args.config_path);
  const auto params = ntn::load_checkpoint(checkpoint_path);

  EnvConfig cfg = spec.env;
  cfg.n_trajectories = params.dims.n_traj;
  cfg.horizon = params.dims.horizon;
  cfg.seed = RngStream::derive_key(args.seed, 1);
  Dataset data = data_path.empty() ? env::generate(cfg, PolicySpec::behavior()).first
                                   : csv::load_dataset(data_path);
  if (data.n_traj != params.dims.n_traj)
    throw std::runtime_error("dataset and checkpoint disagree on the trajectory count");

  const std::string target = target_name.empty() ? spec.targets.front() : target_name;
  ope::OpeConfig ope_cfg = spec.ope;
  if (cfg.env_kind == EnvKind::TumorGrowth) {
    ope_cfg.target = target == "A" ? PolicySpec{PolicyKind::TumorTargetA, 0.05}
                                   : PolicySpec{PolicyKind::TumorTargetB, 0.0};
  } else {
    ope_cfg.target = policy_from_string(target);
  }
  ope_cfg.seed = RngStream::derive_key(args.seed, 3);

  const auto t0 = std::chrono::steady_clock::now();
  const auto est = ope::estimate_value(params, cfg, data, ope_cfg);
  double eta_true = std::numeric_limits<double>::quiet_NaN();
  if (truth_rollouts > 0) {
    eta_true = env::true_policy_value(cfg, ope_cfg.target, truth_rollouts,
                                      RngStream::derive_key(args.seed, 4))
                   .eta;
  }
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::cout << "eta_hat = " << csv::format_double(est.eta) << " (se "
            << csv::format_double(est.std_error) << ")";
  if (truth_rollouts > 0) std::cout << ", eta_true = " << csv::format_double(eta_true);
  std::cout << "\n";

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    std::ofstream out(args.out_dir + "/eval.csv", std::ios::trunc);
    out << "env,method,N,T,gamma,target,seed,eta_hat,eta_true,runtime_s\n";
    out << to_string(cfg.env_kind) << ',' << ntn::to_string(params.dims.trunk) << ','
        << cfg.n_trajectories << ',' << cfg.horizon << ','
        << csv::format_double(cfg.gamma) << ',' << target << ',' << args.seed << ','
        << csv::format_double(est.eta) << ',' << csv::format_double(eta_true) << ','
        << csv::format_double(runtime) << '\n';
  }
  return 0;
}

int cmd_run(const CommonArgs& args, bool fast, int workers, bool deterministic) {
  auto spec = experiment::parse_config(args.config_path);
  if (!args.out_dir.empty()) spec.output_dir = args.out_dir;
  if (args.seed != 0) spec.master_seed = args.seed;
  if (workers > 0) spec.workers = workers;
  spec.deterministic = deterministic;
  if (fast) experiment::apply_fast_mode(spec);

  const auto manifest = experiment::run(spec);
  std::cout << "recipe " << manifest.recipe << " finished in " << manifest.wall_clock_s
            << " s; " << manifest.files.size() << " result files in " << spec.output_dir
            << "\n";
  if (!manifest.failed_cells.empty()) {
    std::cerr << manifest.failed_cells.size() << " cells failed:\n";
    for (const auto& cell : manifest.failed_cells) std::cerr << "  " << cell << "\n";
    return 2;
  }
  return 0;
}

int cmd_check(const std::string& config_path, const std::string& out_dir) {
  int rc = 0;
  if (!config_path.empty()) {
    const auto spec = experiment::parse_config(config_path);
    std::cout << "config OK: recipe " << experiment::to_string(spec.recipe)
              << ", spec hash " << csv::text_hash(spec.canonical_text()) << "\n";
  }
  if (!out_dir.empty()) {
    const auto problems = experiment::verify_manifest(out_dir);
    if (problems.empty()) {
      std::cout << "manifest OK: " << out_dir << "\n";
    } else {
      for (const auto& p : problems) std::cerr << "manifest problem: " << p << "\n";
      rc = 1;
    }
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-way deconfounder for off-policy evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs args;
  int n_override = 0;
  std::string policy_name = "behavior";
  std::string variant_name = "TWD";
  std::string data_path, checkpoint_path, target_name;
  int truth_rollouts = 10000;
  bool fast = false, deterministic = false;
  int workers = 0;
  std::string check_config, check_out;

  auto* gen = app.add_subcommand("gen", "generate a dataset");
  gen->add_option("--config", args.config_path, "config file")->required();
  gen->add_option("--seed", args.seed, "generation seed");
  gen->add_option("--out", args.out_dir, "output directory")->required();
  gen->add_option("--n", n_override, "number of trajectories");
  gen->add_option("--policy", policy_name, "behavior (default) or a target policy");

  auto* train_cmd = app.add_subcommand("train", "train the deconfounder model");
  train_cmd->add_option("--config", args.config_path, "config file")->required();
  train_cmd->add_option("--seed", args.seed, "training seed");
  train_cmd->add_option("--out", args.out_dir, "output directory")->required();
  train_cmd->add_option("--n", n_override, "number of trajectories");
  train_cmd->add_option("--variant", variant_name,
                        "TWD, TWD-TO, TWD-MLP, OWD-NI or OWD-NT");
  train_cmd->add_option("--data", data_path, "existing dataset.csv to train on");

  auto* eval_cmd = app.add_subcommand("eval", "estimate a policy value");
  eval_cmd->add_option("--config", args.config_path, "config file")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval_cmd->add_option("--seed", args.seed, "evaluation seed");
  eval_cmd->add_option("--out", args.out_dir, "output directory (optional)");
  eval_cmd->add_option("--data", data_path, "dataset.csv with initial observations");
  eval_cmd->add_option("--target", target_name, "target policy name");
  eval_cmd->add_option("--truth-rollouts", truth_rollouts,
                       "ground-truth rollouts (0 skips the oracle)");

  auto* run_cmd = app.add_subcommand("run", "run an experiment recipe");
  run_cmd->add_option("--config", args.config_path, "config file")->required();
  run_cmd->add_option("--seed", args.seed, "master seed override");
  run_cmd->add_option("--out", args.out_dir, "output directory override");
  run_cmd->add_flag("--fast", fast, "shrink the workload for smoke runs");
  run_cmd->add_option("--workers", workers, "worker pool size");
  run_cmd->add_flag("--deterministic", deterministic,
                    "byte-stable result files (runtime columns zeroed)");

  auto* check_cmd = app.add_subcommand("check", "validate configs and manifests");
  check_cmd->add_option("--config", check_config, "config file to validate");
  check_cmd->add_option("--out", check_out, "output directory to verify");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(args, n_override, policy_name);
    if (train_cmd->parsed()) return cmd_train(args, n_override, variant_name, data_path);
    if (eval_cmd->parsed())
      return cmd_eval(args, checkpoint_path, data_path, target_name, truth_rollouts);
    if (run_cmd->parsed()) return cmd_run(args, fast, workers, deterministic);
    if (check_cmd->parsed()) {
      if (check_config.empty() && check_out.empty()) {
        std::cerr << "check: provide --config and/or --out\n";
        return 1;
      }
      return cmd_check(check_config, check_out);
    }
  } catch (const twode::config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
