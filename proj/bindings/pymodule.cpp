// Python bindings for the main operations: dataset generation, ground-truth
// policy values, the linear fixed-effects study, model training plus
// plug-in evaluation, and the benchmark metrics.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twode/ablate.hpp"
#include "twode/env.hpp"
#include "twode/linfe.hpp"
#include "twode/ope.hpp"
#include "twode/train.hpp"
#include "twode/version.hpp"

namespace py = pybind11;
using namespace twode;

namespace {

EnvConfig make_env(const std::string& kind, int n, int horizon, double gamma,
                   std::uint64_t seed) {
  EnvConfig cfg;
  cfg.env_kind = env_kind_from_string(kind);
  cfg.n_trajectories = n;
  cfg.horizon = horizon > 0 ? horizon : cfg.default_horizon();
  cfg.gamma = gamma;
  cfg.seed = seed;
  return cfg;
}

PolicySpec make_policy(const EnvConfig& cfg, const std::string& name) {
  if (name == "behavior") return PolicySpec::behavior();
  if (cfg.env_kind == EnvKind::TumorGrowth) {
    if (name == "A") return {PolicyKind::TumorTargetA, 0.05};
    if (name == "B") return {PolicyKind::TumorTargetB, 0.0};
    throw std::invalid_argument("unknown tumor target: " + name);
  }
  return policy_from_string(name);
}

py::dict generate_py(const std::string& kind, int n, int horizon, double gamma,
                     std::uint64_t seed, const std::string& policy) {
  const EnvConfig cfg = make_env(kind, n, horizon, gamma, seed);
  auto [data, latents] = env::generate(cfg, make_policy(cfg, policy));
  py::dict out;
  out["n"] = data.n_traj;
  out["horizon"] = data.horizon;
  out["observations"] = data.observations;
  out["actions"] = data.actions;
  out["rewards"] = data.rewards;
  out["next_observations"] = data.next_observations;
  out["initial_obs"] = data.initial_obs;
  out["u"] = latents.u;
  out["w"] = latents.w;
  if (latents.has_tumor_aux()) out["group"] = latents.group;
  return out;
}

py::tuple true_policy_value_py(const std::string& kind, const std::string& target,
                               int n_rollouts, std::uint64_t seed, double gamma,
                               int horizon) {
  const EnvConfig cfg = make_env(kind, 1, horizon, gamma, seed);
  const auto pv = env::true_policy_value(cfg, make_policy(cfg, target), n_rollouts, seed);
  return py::make_tuple(pv.eta, pv.std_error);
}

py::dict linear_study_py(int n, int horizon, std::uint64_t seed,
                         const std::string& assumption) {
  EnvConfig cfg = make_env("Linear", n, horizon, 1.0, seed);
  auto [data, latents] = env::gen_linear(cfg, PolicySpec::behavior());
  const auto kind = linfe::assumption_from_string(assumption);
  const auto model = linfe::fit_linear_model(data, kind);
  const Eigen::VectorXd truth = env::reward_conditional_mean(cfg, data, latents);

  py::dict out;
  out["train_mse"] = linfe::prediction_mse(model.reward_fit, truth);
  if (kind == linfe::AssumptionKind::OWUC) {
    const Eigen::VectorXd w_eff = env::reward_time_effects(cfg, latents);
    out["theory_mse"] = (w_eff.array() - w_eff.mean()).square().sum() / cfg.horizon;
  } else {
    out["theory_mse"] =
        linfe::theoretical_mse(kind, cfg.linear_reward_var, n, cfg.horizon, 0.0);
  }
  out["rank"] = model.reward_fit.rank;
  return out;
}

py::dict train_and_evaluate_py(const std::string& kind, const std::string& variant,
                               int n, int horizon, double gamma, std::uint64_t seed,
                               const std::string& target, double lr, int batch_size,
                               double weight_decay, int embed_dim, double alpha,
                               int max_epochs, int patience, int ntn_out,
                               int mlp_hidden, int rollouts_per_traj,
                               int truth_rollouts) {
  EnvConfig cfg = make_env(kind, n, horizon, gamma, seed);
  const Dataset data = env::generate(cfg, PolicySpec::behavior()).first;

  train::HyperParams h;
  h.lr = lr;
  h.batch_size = batch_size;
  h.weight_decay = weight_decay;
  h.embed_dim = embed_dim;
  h.loss_alpha = alpha;
  h.max_epochs = max_epochs;
  h.patience = patience;
  h.ntn_out = ntn_out;
  h.mlp_hidden = mlp_hidden;
  h.val_embed_steps = 2;
  h.val_embed_warmup = 5;
  h.seed = RngStream::derive_key(seed, 2);

  const auto report = train::select_and_refit(
      data, {h}, ablate::make_variant(ablate::variant_from_string(variant)));

  ope::OpeConfig ope_cfg;
  ope_cfg.n_rollouts_per_traj = rollouts_per_traj;
  ope_cfg.target = make_policy(cfg, target);
  ope_cfg.seed = RngStream::derive_key(seed, 3);
  const auto est = ope::estimate_value(report.best_params, cfg, data, ope_cfg);

  py::dict out;
  out["eta_hat"] = est.eta;
  out["std_error"] = est.std_error;
  out["best_val_loss"] = report.best_val_loss;
  out["best_epoch"] = report.best_epoch;
  std::vector<double> train_curve, val_curve;
  for (const auto& [tr, va] : report.curve) {
    train_curve.push_back(tr);
    val_curve.push_back(va);
  }
  out["train_curve"] = train_curve;
  out["val_curve"] = val_curve;
  if (truth_rollouts > 0) {
    const auto pv = env::true_policy_value(cfg, ope_cfg.target, truth_rollouts,
                                           RngStream::derive_key(seed, 4));
    out["eta_true"] = pv.eta;
  }
  return out;
}

py::tuple metrics_py(const std::vector<double>& estimates, double eta_true) {
  const auto m = ope::metrics(estimates, eta_true);
  return py::make_tuple(m.lmse, m.bias);
}

Eigen::VectorXd policy_prob_py(const std::string& kind, const std::string& target,
                               const Eigen::VectorXd& obs, double gamma) {
  const EnvConfig cfg = make_env(kind, 1, 0, gamma, 0);
  return env::policy_prob(make_policy(cfg, target), cfg, obs);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "two-way deconfounder for off-policy evaluation under unmeasured confounding";
  m.attr("__version__") = kVersion;

  m.def("generate", &generate_py, py::arg("kind"), py::arg("n"), py::arg("horizon") = 0,
        py::arg("gamma") = 1.0, py::arg("seed") = 0, py::arg("policy") = "behavior",
        "Simulate a dataset; returns observations, actions, rewards and the "
        "hidden latent draws.");

  m.def("true_policy_value", &true_policy_value_py, py::arg("kind"), py::arg("target"),
        py::arg("n_rollouts") = 10000, py::arg("seed") = 0, py::arg("gamma") = 1.0,
        py::arg("horizon") = 0,
        "Monte Carlo ground truth of a target policy; returns (eta, std_error).");

  m.def("theoretical_mse",
        [](const std::string& kind, double sigma2, int n, int t, double var_w) {
          return linfe::theoretical_mse(linfe::assumption_from_string(kind), sigma2, n,
                                        t, var_w);
        },
        py::arg("assumption"), py::arg("sigma2"), py::arg("n"), py::arg("t"),
        py::arg("var_w") = 0.0);

  m.def("linear_study", &linear_study_py, py::arg("n"), py::arg("horizon"),
        py::arg("seed"), py::arg("assumption"),
        "Fit one fixed-effects model on a fresh linear dataset and report its "
        "prediction MSE against the simulator truth.");

  m.def("train_and_evaluate", &train_and_evaluate_py, py::arg("kind"),
        py::arg("variant"), py::arg("n"), py::arg("horizon"), py::arg("gamma"),
        py::arg("seed"), py::arg("target"), py::arg("lr") = 0.005,
        py::arg("batch_size") = 256, py::arg("weight_decay") = 1e-4,
        py::arg("embed_dim") = 2, py::arg("alpha") = 0.5, py::arg("max_epochs") = 30,
        py::arg("patience") = 10, py::arg("ntn_out") = 8, py::arg("mlp_hidden") = 16,
        py::arg("rollouts_per_traj") = 20, py::arg("truth_rollouts") = 0,
        "Train one variant on a fresh dataset and return the plug-in value estimate.");

  m.def("metrics", &metrics_py, py::arg("estimates"), py::arg("eta_true"),
        "Returns (lmse, bias) of repeated estimates against the ground truth.");

  m.def("policy_prob", &policy_prob_py, py::arg("kind"), py::arg("target"),
        py::arg("obs"), py::arg("gamma") = 1.0,
        "Action distribution of a target policy at an observation.");
}
