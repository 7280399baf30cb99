#include "twode/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "twode/ablate.hpp"
#include "twode/config.hpp"
#include "twode/csv.hpp"
#include "twode/env.hpp"
#include "twode/linfe.hpp"
#include "twode/rng.hpp"
#include "twode/version.hpp"

namespace twode::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Recipe recipe) {
  switch (recipe) {
    case Recipe::LinearProps: return "linear-props";
    case Recipe::DpSweep: return "dp-sweep";
    case Recipe::TumorSweep: return "tumor-sweep";
    case Recipe::Sensitivity: return "sensitivity";
    case Recipe::Ablation: return "ablation";
  }
  return "?";
}

Recipe recipe_from_string(const std::string& name) {
  if (name == "linear-props") return Recipe::LinearProps;
  if (name == "dp-sweep") return Recipe::DpSweep;
  if (name == "tumor-sweep") return Recipe::TumorSweep;
  if (name == "sensitivity") return Recipe::Sensitivity;
  if (name == "ablation") return Recipe::Ablation;
  throw config::ConfigError("unknown recipe: " + name);
}

namespace {

PolicySpec resolve_target(EnvKind kind, const std::string& name) {
  if (kind == EnvKind::TumorGrowth) {
    if (name == "A") return {PolicyKind::TumorTargetA, 0.05};
    if (name == "B") return {PolicyKind::TumorTargetB, 0.0};
    throw config::ConfigError("unknown tumor target: " + name);
  }
  return policy_from_string(name);
}

std::vector<std::string> default_methods(Recipe recipe) {
  if (recipe == Recipe::LinearProps) return {"UUC", "OWUC", "TWUC"};
  if (recipe == Recipe::Ablation)
    return {"TWD", "TWD-TO", "TWD-MLP", "OWD-NI", "OWD-NT"};
  return {"TWD"};
}

std::vector<std::string> default_targets(Recipe recipe, EnvKind kind) {
  if (recipe == Recipe::LinearProps || kind == EnvKind::Linear) return {"random0.5"};
  return {"A", "B"};
}

std::vector<int> default_n_list(Recipe recipe) {
  switch (recipe) {
    case Recipe::LinearProps: return {200, 300, 400, 500, 600, 700, 800};
    case Recipe::DpSweep:
    case Recipe::TumorSweep: return {250, 500, 1000, 1500, 2000};
    case Recipe::Sensitivity:
    case Recipe::Ablation: return {1000};
  }
  return {};
}

}  // namespace

void ExperimentSpec::validate() const {
  env.validate();
  if (methods.empty()) throw config::ConfigError("method list is empty");
  if (targets.empty()) throw config::ConfigError("target list is empty");
  if (n_list.empty()) throw config::ConfigError("n_list is empty");
  if (gamma_list.empty()) throw config::ConfigError("gamma_list is empty");
  if (repetitions < 1) throw config::ConfigError("repetitions must be >= 1");
  if (truth_rollouts < 1) throw config::ConfigError("truth_rollouts must be >= 1");
  if (workers < 1) throw config::ConfigError("workers must be >= 1");
  if (grid.empty()) throw config::ConfigError("hyperparameter grid is empty");
  for (const auto& h : grid) h.validate();
  for (const int n : n_list)
    if (n < 1) throw config::ConfigError("n_list entries must be >= 1");
  for (const double g : gamma_list)
    if (g < 0.0 || g > 1.0)
      throw config::ConfigError("gamma_list entries must lie in [0, 1]");

  const auto need = [&](EnvKind kind, const char* what) {
    if (env.env_kind != kind)
      throw config::ConfigError(std::string("recipe ") + to_string(recipe) +
                                " requires env kind " + what);
  };
  switch (recipe) {
    case Recipe::LinearProps:
      need(EnvKind::Linear, "Linear");
      if (targets.size() != 1)
        throw config::ConfigError("linear-props uses exactly one target");
      for (const auto& m : methods) linfe::assumption_from_string(m);
      break;
    case Recipe::DpSweep:
      need(EnvKind::DynamicProcess, "DynamicProcess");
      break;
    case Recipe::TumorSweep:
      need(EnvKind::TumorGrowth, "TumorGrowth");
      break;
    case Recipe::Sensitivity:
    case Recipe::Ablation:
      if (env.env_kind == EnvKind::Linear)
        throw config::ConfigError(std::string("recipe ") + to_string(recipe) +
                                  " requires DynamicProcess or TumorGrowth");
      break;
  }
  if (recipe != Recipe::LinearProps)
    for (const auto& m : methods) ablate::variant_from_string(m);
  for (const auto& t : targets) resolve_target(env.env_kind, t);
}

std::string ExperimentSpec::canonical_text() const {
  std::ostringstream out;
  out << "recipe=" << to_string(recipe) << '\n';
  out << "env=" << twode::to_string(env.env_kind) << '\n';
  out << "horizon=" << env.horizon << '\n';
  out << "gamma=" << csv::format_double(env.gamma) << '\n';
  out << "linear_reward_var=" << csv::format_double(env.linear_reward_var) << '\n';
  if (env.env_kind == EnvKind::TumorGrowth) {
    const auto& tp = env.tumor;
    out << "tumor=" << csv::format_double(tp.rho) << ',' << csv::format_double(tp.K);
    for (int g = 0; g < 3; ++g)
      out << ',' << csv::format_double(tp.beta_c[g]) << ','
          << csv::format_double(tp.alpha[g]) << ',' << csv::format_double(tp.beta[g]);
    out << ',' << csv::format_double(tp.d_max) << ','
        << csv::format_double(tp.v_init_min) << ',' << csv::format_double(tp.v_init_max)
        << ',' << csv::format_double(tp.v_min) << '\n';
  }
  out << "methods=";
  for (const auto& m : methods) out << m << ',';
  out << "\ntargets=";
  for (const auto& t : targets) out << t << ',';
  out << "\nn_list=";
  for (const int n : n_list) out << n << ',';
  out << "\ngamma_list=";
  for (const double g : gamma_list) out << csv::format_double(g) << ',';
  out << "\nrepetitions=" << repetitions << '\n';
  out << "truth_rollouts=" << truth_rollouts << '\n';
  out << "master_seed=" << master_seed << '\n';
  out << "grid=";
  for (const auto& h : grid)
    out << csv::format_double(h.lr) << ':' << h.batch_size << ':'
        << csv::format_double(h.weight_decay) << ':' << h.embed_dim << ':'
        << csv::format_double(h.loss_alpha) << ':' << h.max_epochs << ':' << h.patience
        << ':' << h.ntn_slices << ':' << h.ntn_out << ':' << h.mlp_hidden << ';';
  out << "\nope=" << ope.n_rollouts_per_traj << ',' << (ope.crossfit ? 1 : 0) << ','
      << linear_ope_rollouts << '\n';
  out << "deterministic=" << (deterministic ? 1 : 0) << '\n';
  return out.str();
}

ExperimentSpec parse_config_text(const std::string& text, const std::string& origin) {
  const auto cfg = config::ConfigFile::parse_string(text, origin);
  ExperimentSpec spec;
  spec.recipe = recipe_from_string(cfg.get_string("experiment", "recipe"));

  spec.env.env_kind = env_kind_from_string(cfg.get_string("env", "kind"));
  spec.env.horizon = cfg.get_int("env", "horizon", spec.env.default_horizon());
  spec.env.gamma = cfg.get_double("env", "gamma", 1.0);
  spec.env.linear_reward_var = cfg.get_double("env", "linear_reward_var", 2.0);
  spec.env.noise_scale = cfg.get_double("env", "noise_scale", 1.0);
  spec.env.latent_scale = cfg.get_double("env", "latent_scale", 1.0);
  spec.env.n_trajectories = 1;  // per-cell values come from n_list

  if (spec.env.env_kind == EnvKind::TumorGrowth) {
    auto& tp = spec.env.tumor;
    tp.rho = cfg.get_double("tumor", "rho", tp.rho);
    tp.K = cfg.get_double("tumor", "K", tp.K);
    const auto triple = [&](const char* key, std::array<double, 3>& dst) {
      const auto vals = cfg.get_double_list("tumor", key, {dst[0], dst[1], dst[2]});
      if (vals.size() != 3)
        throw config::ConfigError(std::string("tumor.") + key +
                                  " needs exactly three entries (one per group)");
      std::copy(vals.begin(), vals.end(), dst.begin());
    };
    triple("beta_c", tp.beta_c);
    triple("alpha", tp.alpha);
    triple("beta", tp.beta);
    tp.d_max = cfg.get_double("tumor", "d_max", tp.d_max);
    tp.v_init_min = cfg.get_double("tumor", "v_init_min", tp.v_init_min);
    tp.v_init_max = cfg.get_double("tumor", "v_init_max", tp.v_init_max);
    tp.v_min = cfg.get_double("tumor", "v_min", tp.v_min);
  }

  spec.methods = cfg.get_list("experiment", "methods", default_methods(spec.recipe));
  spec.targets = cfg.get_list("experiment", "targets",
                              default_targets(spec.recipe, spec.env.env_kind));
  spec.n_list = cfg.get_int_list("experiment", "n_list", default_n_list(spec.recipe));
  spec.gamma_list = cfg.get_double_list("experiment", "gamma_list", {spec.env.gamma});
  spec.repetitions = cfg.get_int("experiment", "repetitions", 20);
  spec.truth_rollouts = cfg.get_int("experiment", "truth_rollouts", 10000);
  spec.master_seed = cfg.get_uint64("experiment", "master_seed", 0);
  spec.output_dir = cfg.get_string("experiment", "output_dir", "out");
  spec.workers = cfg.get_int("experiment", "workers", 1);

  // hyperparameter grid: the Cartesian product of the listed values
  train::HyperParams base;
  base.ntn_slices = cfg.get_int("train", "slices", 2);
  base.ntn_out = cfg.get_int("train", "ntn_out", 16);
  base.mlp_hidden = cfg.get_int("train", "hidden", 64);
  base.max_epochs = cfg.get_int("train", "max_epochs", 500);
  base.patience = cfg.get_int("train", "patience", 20);
  base.sigma_min = cfg.get_double("train", "sigma_min", 1e-2);
  base.sigma_max = cfg.get_double("train", "sigma_max", 10.0);
  base.val_embed_steps = cfg.get_int("train", "val_embed_steps", 3);
  base.val_embed_warmup = cfg.get_int("train", "val_embed_warmup", 30);
  // default search ranges; recipe configs usually narrow these substantially
  const auto lrs = cfg.get_double_list("train", "lr", {0.005, 0.001});
  const auto batches = cfg.get_int_list("train", "batch", {256, 512, 1024, 2048, 4096});
  const auto decays = cfg.get_double_list("train", "weight_decay", {0.01, 0.0001});
  const auto dims = cfg.get_int_list("train", "embed_dim", {2, 4, 8});
  const auto alphas = cfg.get_double_list("train", "alpha", {0.0, 0.3, 0.5, 0.7});
  for (const double lr : lrs)
    for (const int batch : batches)
      for (const double decay : decays)
        for (const int d : dims)
          for (const double alpha : alphas) {
            train::HyperParams h = base;
            h.lr = lr;
            h.batch_size = batch;
            h.weight_decay = decay;
            h.embed_dim = d;
            h.loss_alpha = alpha;
            spec.grid.push_back(h);
          }

  spec.ope.n_rollouts_per_traj = cfg.get_int("ope", "rollouts_per_traj", 100);
  spec.ope.crossfit = cfg.get_bool("ope", "crossfit", false);
  spec.linear_ope_rollouts = cfg.get_int("ope", "linear_rollouts", 50);

  cfg.ensure_all_consumed();
  spec.validate();
  return spec;
}

ExperimentSpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config::ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_fast_mode(ExperimentSpec& spec) {
  spec.repetitions = std::min(spec.repetitions, 3);
  for (auto& n : spec.n_list) n = std::min(n, 120);
  spec.n_list.erase(std::unique(spec.n_list.begin(), spec.n_list.end()),
                    spec.n_list.end());
  spec.env.horizon = std::min(spec.env.horizon, 15);
  spec.truth_rollouts = std::min(spec.truth_rollouts, 1000);
  spec.ope.n_rollouts_per_traj = std::min(spec.ope.n_rollouts_per_traj, 20);
  spec.linear_ope_rollouts = std::min(spec.linear_ope_rollouts, 20);
  spec.grid.resize(1);
  spec.grid[0].max_epochs = std::min(spec.grid[0].max_epochs, 60);
  spec.grid[0].patience = std::min(spec.grid[0].patience, 10);
}

std::uint64_t cell_seed(std::uint64_t master_seed, int n, double gamma,
                        const std::string& method, int repetition) {
  std::uint64_t method_hash = 0xcbf29ce484222325ull;
  for (const unsigned char c : method) {
    method_hash ^= c;
    method_hash *= 0x100000001b3ull;
  }
  const auto gamma_bits = std::bit_cast<std::uint64_t>(gamma);
  return RngStream::derive_key(master_seed, method_hash,
                               (static_cast<std::uint64_t>(n) << 20) ^ gamma_bits,
                               static_cast<std::uint64_t>(repetition));
}

void RunManifest::write(const std::string& path) const {
  json j;
  j["version"] = version;
  j["recipe"] = recipe;
  j["spec_hash"] = spec_hash;
  j["master_seed"] = master_seed;
  j["wall_clock_s"] = wall_clock_s;
  j["cell_seeds"] = cell_seeds;
  j["failed_cells"] = failed_cells;
  json files_json = json::array();
  for (const auto& [name, hash] : files)
    files_json.push_back({{"name", name}, {"hash", hash}});
  j["files"] = files_json;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j;
  in >> j;
  RunManifest m;
  m.version = j.at("version").get<std::string>();
  m.recipe = j.at("recipe").get<std::string>();
  m.spec_hash = j.at("spec_hash").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.wall_clock_s = j.at("wall_clock_s").get<double>();
  m.cell_seeds = j.at("cell_seeds").get<std::vector<std::uint64_t>>();
  m.failed_cells = j.at("failed_cells").get<std::vector<std::string>>();
  for (const auto& f : j.at("files"))
    m.files.emplace_back(f.at("name").get<std::string>(), f.at("hash").get<std::string>());
  return m;
}

namespace {

struct Cell {
  int n = 0;
  double gamma = 1.0;
  std::string method;
  int rep = 0;
  std::uint64_t seed = 0;
  // shared across methods so every variant sees the same generated dataset
  std::uint64_t data_seed = 0;

  std::string label() const {
    return "N=" + std::to_string(n) + " gamma=" + csv::format_double(gamma) +
           " method=" + method + " rep=" + std::to_string(rep);
  }
};

struct TargetResult {
  std::string target;
  double eta_hat = 0.0;
  double eta_true = 0.0;
};

struct CellResult {
  bool failed = false;
  std::string error;
  std::vector<TargetResult> targets;
  // linear-props payload
  double train_mse = 0.0, theory_mse = 0.0, ope_mse = 0.0;
  double runtime_s = 0.0;
};

struct TruthTable {
  std::map<std::string, env::PolicyValue> values;

  static std::string key(double gamma, const std::string& target) {
    return csv::format_double(gamma) + "|" + target;
  }
  double eta(double gamma, const std::string& target) const {
    return values.at(key(gamma, target)).eta;
  }
};

TruthTable compute_truths(const ExperimentSpec& spec, const std::vector<double>& gammas) {
  TruthTable table;
  for (const double gamma : gammas) {
    for (const auto& target : spec.targets) {
      EnvConfig cfg = spec.env;
      cfg.gamma = gamma;
      cfg.n_trajectories = 1;
      std::uint64_t target_hash = 0xcbf29ce484222325ull;
      for (const unsigned char c : target) {
        target_hash ^= c;
        target_hash *= 0x100000001b3ull;
      }
      const std::uint64_t seed =
          RngStream::derive_key(spec.master_seed, 0x74727574ull,
                                std::bit_cast<std::uint64_t>(gamma), target_hash);
      table.values[TruthTable::key(gamma, target)] = env::true_policy_value(
          cfg, resolve_target(cfg.env_kind, target), spec.truth_rollouts, seed);
    }
  }
  return table;
}

CellResult run_linear_cell(const ExperimentSpec& spec, const Cell& cell) {
  CellResult result;
  const auto t0 = std::chrono::steady_clock::now();

  EnvConfig cfg = spec.env;
  cfg.n_trajectories = cell.n;
  cfg.seed = RngStream::derive_key(cell.data_seed, 1);
  auto [data, latents] = env::gen_linear(cfg, PolicySpec::behavior());
  const Eigen::VectorXd truth_mean = env::reward_conditional_mean(cfg, data, latents);

  const auto kind = linfe::assumption_from_string(cell.method);
  const auto model = linfe::fit_linear_model(data, kind);
  result.train_mse = linfe::prediction_mse(model.reward_fit, truth_mean);

  if (kind == linfe::AssumptionKind::OWUC) {
    // finite-horizon floor from the realized time effects
    const Eigen::VectorXd w_eff = env::reward_time_effects(cfg, latents);
    result.theory_mse = (w_eff.array() - w_eff.mean()).square().sum() / cfg.horizon;
  } else {
    result.theory_mse =
        linfe::theoretical_mse(kind, cfg.linear_reward_var, cell.n, cfg.horizon, 0.0);
  }

  const auto& target_name = spec.targets.front();
  const PolicySpec target = resolve_target(cfg.env_kind, target_name);
  if (target.kind != PolicyKind::TargetRandom)
    throw std::invalid_argument("linear-props targets must be Bernoulli policies");
  const double eta_hat = linfe::linear_ope(model, data, target, spec.linear_ope_rollouts,
                                           RngStream::derive_key(cell.seed, 3));
  // the plug-in estimand conditions on this replication's latent draws
  const double eta_ref = env::linear_conditional_value(cfg, data, latents, target.p);
  result.ope_mse = (eta_hat - eta_ref) * (eta_hat - eta_ref);
  result.targets.push_back({target_name, eta_hat, eta_ref});

  result.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

CellResult run_sweep_cell(const ExperimentSpec& spec, const Cell& cell,
                          const TruthTable& truths) {
  CellResult result;
  const auto t0 = std::chrono::steady_clock::now();

  EnvConfig cfg = spec.env;
  cfg.n_trajectories = cell.n;
  cfg.gamma = cell.gamma;
  cfg.seed = RngStream::derive_key(cell.data_seed, 1);
  const Dataset data = env::generate(cfg, PolicySpec::behavior()).first;

  std::vector<train::HyperParams> grid = spec.grid;
  for (auto& h : grid) h.seed = RngStream::derive_key(cell.seed, 2);
  const auto kind = ablate::variant_from_string(cell.method);
  const auto options = ablate::make_variant(kind);

  train::TrainReport report;
  if (!spec.ope.crossfit) report = train::select_and_refit(data, grid, options);

  for (std::size_t k = 0; k < spec.targets.size(); ++k) {
    ope::OpeConfig ope_cfg = spec.ope;
    ope_cfg.target = resolve_target(cfg.env_kind, spec.targets[k]);
    ope_cfg.seed = RngStream::derive_key(cell.seed, 3 + k);
    double eta_hat = 0.0;
    if (spec.ope.crossfit) {
      eta_hat = ope::crossfit_estimate(data, cfg, grid, options, ope_cfg);
    } else {
      eta_hat = ope::estimate_value(report.best_params, cfg, data, ope_cfg).eta;
    }
    result.targets.push_back(
        {spec.targets[k], eta_hat, truths.eta(cell.gamma, spec.targets[k])});
  }

  result.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

RunManifest run(const ExperimentSpec& spec) {
  spec.validate();
  const auto t_start = std::chrono::steady_clock::now();
  fs::create_directories(spec.output_dir);

  const bool linear = spec.recipe == Recipe::LinearProps;
  const std::vector<double> gammas =
      (spec.recipe == Recipe::Sensitivity) ? spec.gamma_list
                                           : std::vector<double>{spec.env.gamma};
  const std::vector<int> ns =
      (spec.recipe == Recipe::Sensitivity || spec.recipe == Recipe::Ablation)
          ? std::vector<int>{spec.n_list.front()}
          : spec.n_list;

  std::vector<Cell> cells;
  for (const int n : ns)
    for (const double gamma : gammas)
      for (const auto& method : spec.methods)
        for (int rep = 0; rep < spec.repetitions; ++rep)
          cells.push_back({n, gamma, method, rep,
                           cell_seed(spec.master_seed, n, gamma, method, rep),
                           cell_seed(spec.master_seed, n, gamma, "dataset", rep)});

  TruthTable truths;
  if (!linear) truths = compute_truths(spec, gammas);

  // worker pool over cells; results land in cell order regardless of timing
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      try {
        results[k] = linear ? run_linear_cell(spec, cells[k])
                            : run_sweep_cell(spec, cells[k], truths);
      } catch (const std::exception& e) {
        results[k].failed = true;
        results[k].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < spec.workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  RunManifest manifest;
  manifest.version = kVersion;
  manifest.recipe = to_string(spec.recipe);
  manifest.spec_hash = csv::text_hash(spec.canonical_text());
  manifest.master_seed = spec.master_seed;
  for (const auto& cell : cells) manifest.cell_seeds.push_back(cell.seed);

  std::vector<std::string> out_files;
  const std::string env_name = twode::to_string(spec.env.env_kind);
  if (linear) {
    std::ostringstream out;
    out << "seed,assumption,N,T,train_mse,theory_mse,ope_mse\n";
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (results[k].failed) continue;
      // the seed column identifies the replication's dataset, which every
      // assumption in that replication shares
      out << cells[k].data_seed << ',' << cells[k].method << ',' << cells[k].n << ','
          << spec.env.horizon << ',' << csv::format_double(results[k].train_mse) << ','
          << csv::format_double(results[k].theory_mse) << ','
          << csv::format_double(results[k].ope_mse) << '\n';
    }
    write_text_file(fs::path(spec.output_dir) / "linear_props.csv", out.str());
    out_files.push_back("linear_props.csv");
  } else {
    std::ostringstream runs;
    runs << "env,method,N,T,gamma,target,seed,eta_hat,eta_true,runtime_s\n";
    std::map<std::string, std::pair<std::vector<double>, double>> groups;
    const auto group_key = [&](const std::string& method, int n, double gamma,
                               const std::string& target) {
      return method + "," + std::to_string(n) + "," + csv::format_double(gamma) + "," +
             target;
    };
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (results[k].failed) continue;
      for (const auto& tr : results[k].targets) {
        runs << env_name << ',' << cells[k].method << ',' << cells[k].n << ','
             << spec.env.horizon << ',' << csv::format_double(cells[k].gamma) << ','
             << tr.target << ',' << cells[k].seed << ','
             << csv::format_double(tr.eta_hat) << ',' << csv::format_double(tr.eta_true)
             << ',' << csv::format_double(spec.deterministic ? 0.0 : results[k].runtime_s)
             << '\n';
        auto& group = groups[group_key(cells[k].method, cells[k].n, cells[k].gamma,
                                       tr.target)];
        group.first.push_back(tr.eta_hat);
        group.second = tr.eta_true;
      }
    }
    write_text_file(fs::path(spec.output_dir) / "runs.csv", runs.str());
    out_files.push_back("runs.csv");

    std::ostringstream agg;
    const bool ablation = spec.recipe == Recipe::Ablation;
    agg << (ablation ? "env,target,variant,lmse,bias"
                     : "env,method,N,T,gamma,target,lmse,bias")
        << '\n';
    for (const int n : ns)
      for (const double gamma : gammas)
        for (const auto& method : spec.methods)
          for (const auto& target : spec.targets) {
            const auto it = groups.find(group_key(method, n, gamma, target));
            if (it == groups.end() || it->second.first.empty()) continue;
            const auto m = ope::metrics(it->second.first, it->second.second);
            if (ablation) {
              agg << env_name << ',' << target << ',' << method << ','
                  << csv::format_double(m.lmse) << ',' << csv::format_double(m.bias)
                  << '\n';
            } else {
              agg << env_name << ',' << method << ',' << n << ',' << spec.env.horizon
                  << ',' << csv::format_double(gamma) << ',' << target << ','
                  << csv::format_double(m.lmse) << ',' << csv::format_double(m.bias)
                  << '\n';
            }
          }
    const std::string agg_name = ablation ? "ablation.csv" : "aggregate.csv";
    write_text_file(fs::path(spec.output_dir) / agg_name, agg.str());
    out_files.push_back(agg_name);
  }

  for (std::size_t k = 0; k < cells.size(); ++k)
    if (results[k].failed)
      manifest.failed_cells.push_back(cells[k].label() + ": " + results[k].error);

  manifest.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  for (const auto& name : out_files)
    manifest.files.emplace_back(
        name, csv::file_hash((fs::path(spec.output_dir) / name).string()));
  manifest.write((fs::path(spec.output_dir) / "manifest.json").string());
  return manifest;
}

std::vector<std::string> verify_manifest(const std::string& dir) {
  std::vector<std::string> problems;
  const fs::path root(dir);
  RunManifest manifest;
  try {
    manifest = RunManifest::read((root / "manifest.json").string());
  } catch (const std::exception& e) {
    problems.emplace_back(e.what());
    return problems;
  }
  std::vector<std::string> listed;
  for (const auto& [name, hash] : manifest.files) {
    listed.push_back(name);
    const fs::path p = root / name;
    if (!fs::exists(p)) {
      problems.push_back("missing file: " + name);
      continue;
    }
    if (csv::file_hash(p.string()) != hash) problems.push_back("hash mismatch: " + name);
  }
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    if (std::find(listed.begin(), listed.end(), name) == listed.end())
      problems.push_back("unlisted file: " + name);
  }
  return problems;
}

}  // namespace twode::experiment
