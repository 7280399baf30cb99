#include "twode/types.hpp"

#include <stdexcept>

namespace twode {

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Linear: return "Linear";
    case EnvKind::DynamicProcess: return "DynamicProcess";
    case EnvKind::TumorGrowth: return "TumorGrowth";
  }
  return "?";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "Linear" || name == "linear") return EnvKind::Linear;
  if (name == "DynamicProcess" || name == "dp" || name == "dynamic-process")
    return EnvKind::DynamicProcess;
  if (name == "TumorGrowth" || name == "tumor" || name == "tumor-growth")
    return EnvKind::TumorGrowth;
  throw std::invalid_argument("unknown env kind: " + name);
}

int EnvConfig::obs_dim() const {
  switch (env_kind) {
    case EnvKind::Linear: return 1;
    case EnvKind::DynamicProcess: return 4;
    case EnvKind::TumorGrowth: return 2;
  }
  return 0;
}

int EnvConfig::n_action_components() const {
  return env_kind == EnvKind::TumorGrowth ? 2 : 1;
}

int EnvConfig::n_actions() const {
  return env_kind == EnvKind::TumorGrowth ? 4 : 2;
}

void EnvConfig::validate() const {
  if (n_trajectories < 1) throw std::invalid_argument("n_trajectories must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("gamma must lie in [0, 1]");
  if (linear_reward_var < 0.0)
    throw std::invalid_argument("linear_reward_var must be >= 0");
  if (noise_scale < 0.0 || latent_scale < 0.0)
    throw std::invalid_argument("scale multipliers must be >= 0");
  if (env_kind == EnvKind::TumorGrowth) {
    if (tumor.K <= 0.0 || tumor.v_min <= 0.0)
      throw std::invalid_argument("tumor K and v_min must be positive");
    if (tumor.v_init_min <= 0.0 || tumor.v_init_max < tumor.v_init_min)
      throw std::invalid_argument("tumor initial volume range invalid");
    if (tumor.d_max <= 0.0) throw std::invalid_argument("tumor d_max must be positive");
  }
}

void Dataset::validate() const {
  const int cells = n_traj * horizon;
  if (observations.rows() != cells || observations.cols() != obs_dim)
    throw std::invalid_argument("observations shape mismatch");
  if (actions.rows() != cells || actions.cols() != n_action_components)
    throw std::invalid_argument("actions shape mismatch");
  if (rewards.size() != cells) throw std::invalid_argument("rewards shape mismatch");
  if (next_observations.rows() != cells || next_observations.cols() != obs_dim)
    throw std::invalid_argument("next_observations shape mismatch");
  if (initial_obs.rows() != n_traj || initial_obs.cols() != obs_dim)
    throw std::invalid_argument("initial_obs shape mismatch");
  if ((actions.array() < 0).any() || (actions.array() > 1).any())
    throw std::invalid_argument("actions outside {0,1}");
  if (!rewards.allFinite() || !observations.allFinite())
    throw std::invalid_argument("non-finite dataset entries");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Behavior: return "behavior";
    case PolicyKind::TargetRandom: return "random";
    case PolicyKind::TargetA: return "A";
    case PolicyKind::TargetB: return "B";
    case PolicyKind::TumorTargetA: return "A";
    case PolicyKind::TumorTargetB: return "B";
  }
  return "?";
}

PolicySpec policy_from_string(const std::string& name) {
  if (name == "behavior") return PolicySpec::behavior();
  if (name == "A") return {PolicyKind::TargetA, 0.3};
  if (name == "B") return {PolicyKind::TargetB, 0.5};
  if (name == "tumorA") return {PolicyKind::TumorTargetA, 0.05};
  if (name == "tumorB") return {PolicyKind::TumorTargetB, 0.0};
  if (name.rfind("random", 0) == 0) {
    double p = 0.5;
    if (name.size() > 6) p = std::stod(name.substr(6));
    return PolicySpec::target_random(p);
  }
  throw std::invalid_argument("unknown policy: " + name);
}

Dataset subset_trajectories(const Dataset& data, const std::vector<int>& trajectories) {
  Dataset out;
  out.n_traj = static_cast<int>(trajectories.size());
  out.horizon = data.horizon;
  out.obs_dim = data.obs_dim;
  out.n_action_components = data.n_action_components;
  const int cells = out.n_traj * out.horizon;
  out.observations.resize(cells, out.obs_dim);
  out.actions.resize(cells, out.n_action_components);
  out.rewards.resize(cells);
  out.next_observations.resize(cells, out.obs_dim);
  out.initial_obs.resize(out.n_traj, out.obs_dim);
  if (!data.next_available.empty()) out.next_available.resize(cells);
  for (int k = 0; k < out.n_traj; ++k) {
    const int i = trajectories[k];
    if (i < 0 || i >= data.n_traj) throw std::out_of_range("trajectory index");
    out.initial_obs.row(k) = data.initial_obs.row(i);
    for (int t = 0; t < out.horizon; ++t) {
      const int src = data.row(i, t);
      const int dst = out.row(k, t);
      out.observations.row(dst) = data.observations.row(src);
      out.actions.row(dst) = data.actions.row(src);
      out.rewards(dst) = data.rewards(src);
      out.next_observations.row(dst) = data.next_observations.row(src);
      if (!data.next_available.empty()) out.next_available[dst] = data.next_available[src];
    }
  }
  return out;
}

}  // namespace twode
