// Core data types shared by the simulators, estimators and drivers.

#ifndef TWODE_TYPES_HPP
#define TWODE_TYPES_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace twode {

enum class EnvKind { Linear, DynamicProcess, TumorGrowth };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

// Pharmacokinetic/pharmacodynamic constants for the tumor simulator.
// The shipped defaults are placeholders for desk-scale experimentation,
// not calibrated clinical values; real studies should supply their own.
struct TumorParams {
  double rho = 0.07;   // growth rate in the Gompertz-style term
  double K = 500.0;    // carrying capacity (volume units)
  std::array<double, 3> beta_c = {0.025, 0.028, 0.031};  // chemo effect per group
  std::array<double, 3> alpha = {0.035, 0.040, 0.045};   // radio linear term per group
  std::array<double, 3> beta = {0.0035, 0.0040, 0.0045}; // radio quadratic term per group
  double d_max = 13.0;       // diameter scale in the dosing policy
  double v_init_min = 1.0;   // initial tumor volume range
  double v_init_max = 50.0;
  double v_min = 1e-3;       // positivity clamp for the volume update
};

struct EnvConfig {
  EnvKind env_kind = EnvKind::Linear;
  int n_trajectories = 1;
  int horizon = 50;          // Linear/DP default 50; TumorGrowth default 60
  double gamma = 1.0;        // confounding strength, ignored by Linear
  std::uint64_t seed = 0;
  double linear_reward_var = 2.0;  // variance of the linear env reward noise
  // Diagnostic multipliers; 1.0 reproduces the reference processes.
  double noise_scale = 1.0;
  double latent_scale = 1.0;
  TumorParams tumor;

  int obs_dim() const;
  int n_action_components() const;  // 1 (binary) or 2 (radio+chemo)
  int n_actions() const;            // joint action count: 2 or 4
  int default_horizon() const { return env_kind == EnvKind::TumorGrowth ? 60 : 50; }
  void validate() const;            // throws std::invalid_argument
};

// N x T grid of (observation, action, reward) plus the next-observation
// targets. Rows are (trajectory, time) lexicographic: row = i * T + t.
struct Dataset {
  int n_traj = 0;
  int horizon = 0;
  int obs_dim = 0;
  int n_action_components = 1;
  Eigen::MatrixXd observations;       // (N*T) x obs_dim
  Eigen::MatrixXi actions;            // (N*T) x components, values in {0,1}
  Eigen::VectorXd rewards;            // N*T
  Eigen::MatrixXd next_observations;  // (N*T) x obs_dim
  Eigen::MatrixXd initial_obs;        // N x obs_dim
  // False marks cells whose next observation is unavailable (datasets
  // reloaded from the on-disk grid lack the final transition target).
  std::vector<bool> next_available;

  int row(int i, int t) const { return i * horizon + t; }
  int n_cells() const { return n_traj * horizon; }
  bool has_next(int i, int t) const {
    return next_available.empty() ? true : next_available[row(i, t)];
  }
  // Joint action id in [0, 2^components): id = 2*A_r + A_c for tumor.
  int action_id(int i, int t) const {
    const int r = row(i, t);
    int id = actions(r, 0);
    if (n_action_components == 2) id = 2 * actions(r, 0) + actions(r, 1);
    return id;
  }
  void validate() const;
};

// Hidden oracle columns, kept apart from Dataset so estimators cannot
// accidentally read them.
struct LatentTable {
  Eigen::VectorXd u;  // N trajectory confounders
  Eigen::VectorXd w;  // T time confounders
  // Tumor-only per-trajectory simulator state.
  std::vector<int> group;        // S_i in {1,2,3}
  Eigen::VectorXd rho, K, beta_c, alpha, beta;  // PK-PD parameters per trajectory
  std::vector<bool> volume_clamped;             // positivity clamp fired

  bool has_tumor_aux() const { return !group.empty(); }
};

enum class PolicyKind {
  Behavior,
  TargetRandom,   // P(A=1) = p, binary action envs
  TargetA,        // dynamic process, p = 0.3
  TargetB,        // dynamic process, p = 0.5
  TumorTargetA,   // both doses Bernoulli(0.05)
  TumorTargetB,   // dose probability keyed to tumor volume
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::TargetRandom;
  double p = 0.5;  // used by TargetRandom

  static PolicySpec behavior() { return {PolicyKind::Behavior, 0.0}; }
  static PolicySpec target_random(double p) { return {PolicyKind::TargetRandom, p}; }
  bool is_target() const { return kind != PolicyKind::Behavior; }
};

std::string to_string(PolicyKind kind);
PolicySpec policy_from_string(const std::string& name);

// Copy of the dataset restricted to the given trajectories (reindexed in the
// order supplied).
Dataset subset_trajectories(const Dataset& data, const std::vector<int>& trajectories);

}  // namespace twode

#endif  // TWODE_TYPES_HPP
