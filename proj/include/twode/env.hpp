// Simulators for the three data-generating processes, their behavior and
// target policies, and ground-truth policy-value oracles.

#ifndef TWODE_ENV_HPP
#define TWODE_ENV_HPP

#include <cstdint>
#include <utility>

#include "twode/rng.hpp"
#include "twode/types.hpp"

namespace twode::env {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Inputs a behavior policy needs beyond the observation. Target policies
// never read this.
struct BehaviorContext {
  double u = 0.0;
  double w = 0.0;
  int group = 1;   // tumor S_i
  int t = 1;       // 1-based time index (tumor time confounder)
};

// Action distribution over the env's joint action ids. Throws if the
// policy is Behavior and ctx is null, or if the policy does not fit the
// env's action space.
Eigen::VectorXd policy_prob(const PolicySpec& policy, const EnvConfig& cfg,
                            const Eigen::VectorXd& obs,
                            const BehaviorContext* ctx = nullptr);

// Latent draws alone; generation = draw_latents + simulate. Splitting the
// two lets tests replay the noise streams against modified latents. The
// table is mutable because the tumor simulator records clamp diagnostics.
LatentTable draw_latents(const EnvConfig& cfg);
Dataset simulate(const EnvConfig& cfg, const PolicySpec& policy,
                 LatentTable& latents);

std::pair<Dataset, LatentTable> gen_linear(const EnvConfig& cfg,
                                           const PolicySpec& policy);
std::pair<Dataset, LatentTable> gen_dynamic_process(const EnvConfig& cfg,
                                                    const PolicySpec& policy);
std::pair<Dataset, LatentTable> gen_tumor(const EnvConfig& cfg,
                                          const PolicySpec& policy);
std::pair<Dataset, LatentTable> generate(const EnvConfig& cfg,
                                         const PolicySpec& policy);

struct PolicyValue {
  double eta = 0.0;
  double std_error = 0.0;
  int n_rollouts = 0;
};

// Monte Carlo ground truth: fresh worlds per rollout, latents drawn from
// the DGP but never consulted by the (target) policy.
PolicyValue true_policy_value(const EnvConfig& cfg, const PolicySpec& policy,
                              int n_rollouts, std::uint64_t seed);

// Conditional-mean oracles for the linear fixed-effects study. Entries are
// aligned with Dataset rows (i, t) lexicographic.
Eigen::VectorXd reward_conditional_mean(const EnvConfig& cfg, const Dataset& data,
                                        const LatentTable& latents);
Eigen::MatrixXd nextobs_conditional_mean(const EnvConfig& cfg, const Dataset& data,
                                         const LatentTable& latents);

// Fixed effects as they enter the reward equation (linear env: 2*w_t and
// 2*u_i). These feed the one-way misspecification floor.
Eigen::VectorXd reward_time_effects(const EnvConfig& cfg, const LatentTable& latents);
Eigen::VectorXd reward_traj_effects(const EnvConfig& cfg, const LatentTable& latents);

// Exact conditional value of a Bernoulli(p) target policy on the linear env,
// given the dataset's initial observations and latent draws: the estimand of
// the plug-in estimator, obtained by unrolling the linear recursion with the
// action and noise expectations taken exactly.
double linear_conditional_value(const EnvConfig& cfg, const Dataset& data,
                                const LatentTable& latents, double p_treat);

}  // namespace twode::env

#endif  // TWODE_ENV_HPP
