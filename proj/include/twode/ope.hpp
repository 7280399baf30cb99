// Model-based Monte Carlo policy-value estimation: plug the estimated
// latents and the learned conditional-Gaussian transition model into the
// averaged-rollout estimator, with a cross-fitted variant and the LMSE/bias
// metrics.

#ifndef TWODE_OPE_HPP
#define TWODE_OPE_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "twode/env.hpp"
#include "twode/ntn.hpp"
#include "twode/rng.hpp"
#include "twode/train.hpp"
#include "twode/types.hpp"

namespace twode::ope {

// Conditional Gaussian over (reward, next observation) on the raw data
// scale. Implementations: the trained network, and oracle adapters that
// wrap a simulator's true transition law.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;
  virtual int obs_dim() const = 0;
  virtual int n_actions() const = 0;
  // mu/sigma are B x (1 + obs_dim), reward first.
  virtual void predict(const Eigen::MatrixXd& obs, const std::vector<int>& actions,
                       const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
                       Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) const = 0;
};

// Trained network adapter; de-standardizes predictions to the raw scale.
class NtnTransitionModel final : public TransitionModel {
 public:
  explicit NtnTransitionModel(const ntn::NtnParams& params) : params_(&params) {}
  int obs_dim() const override { return params_->dims.obs_dim; }
  int n_actions() const override { return params_->dims.n_actions; }
  void predict(const Eigen::MatrixXd& obs, const std::vector<int>& actions,
               const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
               Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) const override;

 private:
  const ntn::NtnParams* params_;
};

// The true dynamic-process transition law with the true scalar latents
// passed as one-dimensional embeddings.
class DpOracleModel final : public TransitionModel {
 public:
  explicit DpOracleModel(const EnvConfig& cfg) : cfg_(cfg) {}
  int obs_dim() const override { return 4; }
  int n_actions() const override { return 2; }
  void predict(const Eigen::MatrixXd& obs, const std::vector<int>& actions,
               const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
               Eigen::MatrixXd& mu, Eigen::MatrixXd& sigma) const override;

 private:
  EnvConfig cfg_;
};

struct OpeConfig {
  int n_rollouts_per_traj = 100;  // m
  PolicySpec target = PolicySpec::target_random(0.5);
  bool crossfit = false;
  std::uint64_t seed = 0;
};

struct ValueEstimate {
  double eta = 0.0;
  double std_error = 0.0;  // across trajectories
};

// One simulated trajectory under the target policy: sample the action, then
// (reward, next observation) from the model, feeding the sampled observation
// forward. Returns the T sampled rewards.
Eigen::VectorXd rollout(const TransitionModel& model, const EnvConfig& env_cfg,
                        const Eigen::VectorXd& u_hat, const Eigen::MatrixXd& w_hats,
                        const Eigen::VectorXd& initial_obs, const PolicySpec& target,
                        RngStream& rng);

// eta_hat = (1 / (N T m)) sum of rollout rewards over trajectories and runs.
// Rollout (i, run) draws from its own stream derived from cfg.seed, so the
// result equals the sequential average of rollout() calls no matter how the
// batching is arranged internally.
ValueEstimate estimate_value(const TransitionModel& model, const EnvConfig& env_cfg,
                             const Eigen::MatrixXd& initial_obs,
                             const Eigen::MatrixXd& u_hats, const Eigen::MatrixXd& w_hats,
                             const OpeConfig& cfg);

ValueEstimate estimate_value(const ntn::NtnParams& params, const EnvConfig& env_cfg,
                             const Dataset& data, const OpeConfig& cfg);

// Sample-splitting variant: train one model per trajectory half, evaluate
// each half's initial observations and latent estimates under the other
// half's transition network, and average the two estimates. Both folds are
// trained with the same seed. Explicit folds may be supplied for testing;
// they are canonicalized by sorting.
double crossfit_estimate(const Dataset& data, const EnvConfig& env_cfg,
                         const std::vector<train::HyperParams>& grid,
                         const train::TrainOptions& options, const OpeConfig& cfg,
                         const std::vector<int>* fold1 = nullptr,
                         const std::vector<int>* fold2 = nullptr);

struct Metrics {
  double lmse = 0.0;
  double bias = 0.0;
};

// lmse = ln((1/R) sum (eta_r - eta)^2), floored at ln(1e-300); bias is the
// mean signed error.
Metrics metrics(const std::vector<double>& estimates, double eta_true);

}  // namespace twode::ope

#endif  // TWODE_OPE_HPP
