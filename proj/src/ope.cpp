#include "twode/ope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace twode::ope {

void NtnTransitionModel::predict(const Eigen::MatrixXd& obs,
                                 const std::vector<int>& actions,
                                 const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
                                 Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) const {
  ntn::predict_batch(*params_, obs, actions, u, w, mu, sigma);
  // de-standardize to the raw data scale
  const auto& s = params_->standardizer;
  mu.col(0) = mu.col(0).array() * s.reward_std + s.reward_mean;
  sigma.col(0) *= s.reward_std;
  for (int j = 0; j < params_->dims.obs_dim; ++j) {
    mu.col(1 + j) = mu.col(1 + j).array() * s.obs_std(j) + s.obs_mean(j);
    sigma.col(1 + j) *= s.obs_std(j);
  }
}

void DpOracleModel::predict(const Eigen::MatrixXd& obs, const std::vector<int>& actions,
                            const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
                            Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) const {
  const int n = static_cast<int>(obs.rows());
  mu.resize(n, 5);
  sigma.resize(n, 5);
  sigma.setConstant(cfg_.noise_scale);
  for (int s = 0; s < n; ++s) {
    const double a = static_cast<double>(actions[s]);
    const double ui = u(s, 0);
    const double wt = w(s, 0);
    mu(s, 0) = 0.25 * obs.row(s).sum() + cfg_.gamma * 3.0 * ui * wt + 2.5 * a;
    const double latent[4] = {ui - wt, ui + wt, -ui - wt, -ui + wt};
    for (int j = 0; j < 4; ++j)
      mu(s, 1 + j) = 0.8 * obs(s, j) + cfg_.gamma * 0.1 * latent[j] + a - 0.5;
  }
}

Eigen::VectorXd rollout(const TransitionModel& model, const EnvConfig& env_cfg,
                        const Eigen::VectorXd& u_hat, const Eigen::MatrixXd& w_hats,
                        const Eigen::VectorXd& initial_obs, const PolicySpec& target,
                        RngStream& rng) {
  if (!target.is_target())
    throw std::invalid_argument("rollout requires a latent-free target policy");
  const int horizon = static_cast<int>(w_hats.rows());
  if (horizon < 1) throw std::invalid_argument("w_hats must cover the horizon");
  const int d_o = model.obs_dim();

  Eigen::VectorXd rewards(horizon);
  Eigen::MatrixXd obs = initial_obs.transpose();  // 1 x d_o
  Eigen::MatrixXd u = u_hat.transpose();
  Eigen::MatrixXd mu, sigma;
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd probs =
        env::policy_prob(target, env_cfg, obs.row(0).transpose());
    const int action = rng.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
    model.predict(obs, {action}, u, w_hats.row(t), mu, sigma);
    rewards(t) = mu(0, 0) + sigma(0, 0) * rng.normal();
    for (int j = 0; j < d_o; ++j)
      obs(0, j) = mu(0, 1 + j) + sigma(0, 1 + j) * rng.normal();
    if (!std::isfinite(rewards(t)) || !obs.allFinite())
      throw std::runtime_error("rollout produced a non-finite sample at t = " +
                               std::to_string(t + 1));
  }
  return rewards;
}

ValueEstimate estimate_value(const TransitionModel& model, const EnvConfig& env_cfg,
                             const Eigen::MatrixXd& initial_obs,
                             const Eigen::MatrixXd& u_hats, const Eigen::MatrixXd& w_hats,
                             const OpeConfig& cfg) {
  if (cfg.n_rollouts_per_traj < 1)
    throw std::invalid_argument("n_rollouts_per_traj must be >= 1");
  if (!cfg.target.is_target())
    throw std::invalid_argument("estimate_value requires a latent-free target policy");
  const int n = static_cast<int>(initial_obs.rows());
  const int horizon = static_cast<int>(w_hats.rows());
  const int m = cfg.n_rollouts_per_traj;
  const int d_o = model.obs_dim();
  if (u_hats.rows() != n) throw std::invalid_argument("latent estimates missing");
  const int pairs = n * m;

  // Every (trajectory, run) pair owns the stream rollout() would use, so the
  // batched sweep below reproduces the sequential average exactly.
  std::vector<RngStream> streams;
  streams.reserve(pairs);
  for (int p = 0; p < pairs; ++p)
    streams.push_back(RngStream::derive(cfg.seed, StreamPurpose::Rollout, p));

  Eigen::MatrixXd obs(pairs, d_o);
  Eigen::MatrixXd u(pairs, u_hats.cols());
  for (int i = 0; i < n; ++i)
    for (int run = 0; run < m; ++run) {
      obs.row(i * m + run) = initial_obs.row(i);
      u.row(i * m + run) = u_hats.row(i);
    }

  Eigen::VectorXd pair_total = Eigen::VectorXd::Zero(pairs);
  std::vector<int> actions(pairs);
  Eigen::MatrixXd w_t(pairs, w_hats.cols());
  Eigen::MatrixXd mu, sigma;
  for (int t = 0; t < horizon; ++t) {
    for (int p = 0; p < pairs; ++p) {
      const Eigen::VectorXd probs =
          env::policy_prob(cfg.target, env_cfg, obs.row(p).transpose());
      actions[p] =
          streams[p].categorical({probs.data(), static_cast<std::size_t>(probs.size())});
    }
    w_t = w_hats.row(t).replicate(pairs, 1);
    model.predict(obs, actions, u, w_t, mu, sigma);
    for (int p = 0; p < pairs; ++p) {
      const double r = mu(p, 0) + sigma(p, 0) * streams[p].normal();
      pair_total(p) += r;
      for (int j = 0; j < d_o; ++j)
        obs(p, j) = mu(p, 1 + j) + sigma(p, 1 + j) * streams[p].normal();
      if (!std::isfinite(r) || !obs.row(p).allFinite())
        throw std::runtime_error(
            "rollout produced a non-finite sample (trajectory " +
            std::to_string(p / m) + ", run " + std::to_string(p % m) + ", t = " +
            std::to_string(t + 1) + ")");
    }
  }

  ValueEstimate est;
  est.eta = pair_total.sum() / (static_cast<double>(pairs) * horizon);
  if (n > 1) {
    Eigen::VectorXd traj_mean(n);
    for (int i = 0; i < n; ++i)
      traj_mean(i) = pair_total.segment(i * m, m).sum() / (static_cast<double>(m) * horizon);
    const double var =
        (traj_mean.array() - est.eta).square().sum() / static_cast<double>(n - 1);
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

ValueEstimate estimate_value(const ntn::NtnParams& params, const EnvConfig& env_cfg,
                             const Dataset& data, const OpeConfig& cfg) {
  const auto& dims = params.dims;
  Eigen::MatrixXd u_hats = Eigen::MatrixXd::Zero(data.n_traj, dims.embed_dim);
  Eigen::MatrixXd w_hats = Eigen::MatrixXd::Zero(data.horizon, dims.embed_dim);
  if (dims.has_u()) u_hats = params.block("u_table");
  if (dims.has_w()) w_hats = params.block("w_table");
  NtnTransitionModel model(params);
  return estimate_value(model, env_cfg, data.initial_obs, u_hats, w_hats, cfg);
}

double crossfit_estimate(const Dataset& data, const EnvConfig& env_cfg,
                         const std::vector<train::HyperParams>& grid,
                         const train::TrainOptions& options, const OpeConfig& cfg,
                         const std::vector<int>* fold1, const std::vector<int>* fold2) {
  std::vector<int> f1, f2;
  if (fold1 != nullptr && fold2 != nullptr) {
    f1 = *fold1;
    f2 = *fold2;
  } else {
    const int n_first = (data.n_traj + 1) / 2;  // odd N: extra trajectory in fold 1
    for (int i = 0; i < data.n_traj; ++i) (i < n_first ? f1 : f2).push_back(i);
  }
  std::sort(f1.begin(), f1.end());
  std::sort(f2.begin(), f2.end());
  if (f1.empty() || f2.empty()) throw std::invalid_argument("both folds must be non-empty");

  const Dataset d1 = subset_trajectories(data, f1);
  const Dataset d2 = subset_trajectories(data, f2);
  const auto model1 = train::select_and_refit(d1, grid, options);
  const auto model2 = train::select_and_refit(d2, grid, options);

  // fold j's initial observations and latent estimates, the other fold's net
  const auto eval = [&](const ntn::NtnParams& own, const ntn::NtnParams& other,
                        const Dataset& fold_data) {
    const auto& dims = own.dims;
    Eigen::MatrixXd u_hats = Eigen::MatrixXd::Zero(fold_data.n_traj, dims.embed_dim);
    Eigen::MatrixXd w_hats = Eigen::MatrixXd::Zero(fold_data.horizon, dims.embed_dim);
    if (dims.has_u()) u_hats = own.block("u_table");
    if (dims.has_w()) w_hats = own.block("w_table");
    NtnTransitionModel model(other);
    return estimate_value(model, env_cfg, fold_data.initial_obs, u_hats, w_hats, cfg).eta;
  };
  const double eta1 = eval(model1.best_params, model2.best_params, d1);
  const double eta2 = eval(model2.best_params, model1.best_params, d2);
  return 0.5 * (eta1 + eta2);
}

Metrics metrics(const std::vector<double>& estimates, double eta_true) {
  if (estimates.empty()) throw std::invalid_argument("metrics needs at least one estimate");
  double sq_sum = 0.0, err_sum = 0.0;
  for (const double est : estimates) {
    const double err = est - eta_true;
    sq_sum += err * err;
    err_sum += err;
  }
  Metrics out;
  const double mse = sq_sum / static_cast<double>(estimates.size());
  out.lmse = std::log(std::max(mse, 1e-300));
  out.bias = err_sum / static_cast<double>(estimates.size());
  return out;
}

}  // namespace twode::ope
