#include "twode/env.hpp"

#include <cmath>
#include <stdexcept>

namespace twode::env {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

// --- dynamic process constants (four-dimensional observation) ---
constexpr double kDpDecay = 0.8;       // mu_o diagonal
constexpr double kDpLatentScale = 0.1; // beta_o diagonal
constexpr double kDpActionShift = 1.0; // lambda_o
constexpr double kDpBias = -0.5;       // b_o
constexpr double kDpRewardObs = 0.25;  // mu_r entries
constexpr double kDpRewardLatent = 3.0;
constexpr double kDpRewardAction = 2.5;
constexpr double kDpBehaviorObs = 0.25;  // mu_a entries
constexpr double kDpBehaviorBias = -4.0;
constexpr double kDpBehaviorLatent = 3.0;

// latent direction [u-w, u+w, -u-w, -u+w]
inline Eigen::Vector4d dp_latent_vector(double u, double w) {
  return {u - w, u + w, -u - w, -u + w};
}

inline double tumor_diameter(double volume) {
  return std::cbrt(6.0 * volume / kPi);
}

inline double tumor_time_term(int t) { return std::sin(0.1 * kPi * t); }

struct TumorTraits {
  double rho, K, beta_c, alpha, beta;
};

// Both tumor dose components are independent Bernoullis under every
// policy here, so generation samples per-component marginals.
void tumor_dose_probs(const PolicySpec& policy, const EnvConfig& cfg,
                      double volume, int group, int t, double& p_radio,
                      double& p_chemo) {
  switch (policy.kind) {
    case PolicyKind::Behavior: {
      const double d = tumor_diameter(volume);
      const double theta = cfg.tumor.d_max / 2.0;
      const double dose_drive = 10.0 / cfg.tumor.d_max * (d - theta);
      const double conf = cfg.gamma * (3.0 * sigmoid(static_cast<double>(group) - 2.0) -
                                       0.75 * tumor_time_term(t));
      p_radio = sigmoid(dose_drive + conf);
      p_chemo = p_radio;
      return;
    }
    case PolicyKind::TumorTargetA:
      p_radio = p_chemo = 0.05;
      return;
    case PolicyKind::TumorTargetB: {
      double p = 0.01;
      if (volume > 88.0)
        p = 0.2;
      else if (volume > 44.0)
        p = 0.1;
      else if (volume > 5.0)
        p = 0.05;
      p_radio = p_chemo = p;
      return;
    }
    default:
      throw std::invalid_argument("policy does not apply to the tumor env");
  }
}

double binary_action_prob(const PolicySpec& policy, const EnvConfig& cfg,
                          const Eigen::VectorXd& obs, const BehaviorContext* ctx) {
  switch (policy.kind) {
    case PolicyKind::Behavior: {
      if (ctx == nullptr)
        throw std::invalid_argument("behavior policy requires latent context");
      if (cfg.env_kind == EnvKind::Linear)
        return sigmoid(obs(0) + ctx->u + ctx->w);
      // dynamic process
      const double uw = ctx->u * ctx->w + ctx->u + ctx->w;
      return sigmoid(kDpBehaviorObs * obs.sum() + kDpBehaviorBias +
                     cfg.gamma * kDpBehaviorLatent * uw);
    }
    case PolicyKind::TargetRandom:
      return policy.p;
    case PolicyKind::TargetA:
      return 0.3;
    case PolicyKind::TargetB:
      return 0.5;
    default:
      throw std::invalid_argument("policy does not apply to a binary-action env");
  }
}

struct Streams {
  RngStream init, noise_obs, noise_reward, action;
  static Streams make(std::uint64_t seed, std::uint64_t traj) {
    return {RngStream::derive(seed, StreamPurpose::InitObs, traj),
            RngStream::derive(seed, StreamPurpose::NoiseObs, traj),
            RngStream::derive(seed, StreamPurpose::NoiseReward, traj),
            RngStream::derive(seed, StreamPurpose::Action, traj)};
  }
};

Dataset make_empty(const EnvConfig& cfg) {
  Dataset d;
  d.n_traj = cfg.n_trajectories;
  d.horizon = cfg.horizon;
  d.obs_dim = cfg.obs_dim();
  d.n_action_components = cfg.n_action_components();
  const int cells = d.n_traj * d.horizon;
  d.observations.resize(cells, d.obs_dim);
  d.actions.resize(cells, d.n_action_components);
  d.rewards.resize(cells);
  d.next_observations.resize(cells, d.obs_dim);
  d.initial_obs.resize(d.n_traj, d.obs_dim);
  return d;
}

void simulate_linear_traj(const EnvConfig& cfg, const PolicySpec& policy,
                          double u, const Eigen::VectorXd& w, int i,
                          Streams& s, Dataset& out) {
  const double reward_sd = std::sqrt(cfg.linear_reward_var) * cfg.noise_scale;
  double o = s.init.normal() * cfg.noise_scale;
  out.initial_obs(i, 0) = o;
  for (int t = 0; t < cfg.horizon; ++t) {
    Eigen::VectorXd obs(1);
    obs << o;
    BehaviorContext ctx{u, w(t), 1, t + 1};
    const double p = binary_action_prob(policy, cfg, obs, &ctx);
    const int a = s.action.bernoulli(p);
    const double r = o + 3.0 * a + 2.0 * u + 2.0 * w(t) + s.noise_reward.normal() * reward_sd;
    const double o_next =
        0.7 * o + a + 2.0 * u + 2.0 * w(t) - 0.5 + s.noise_obs.normal() * cfg.noise_scale;
    const int row = out.row(i, t);
    out.observations(row, 0) = o;
    out.actions(row, 0) = a;
    out.rewards(row) = r;
    out.next_observations(row, 0) = o_next;
    o = o_next;
  }
}

void simulate_dp_traj(const EnvConfig& cfg, const PolicySpec& policy, double u,
                      const Eigen::VectorXd& w, int i, Streams& s, Dataset& out) {
  Eigen::Vector4d o;
  for (int k = 0; k < 4; ++k) o(k) = s.init.normal() * cfg.noise_scale;
  out.initial_obs.row(i) = o.transpose();
  for (int t = 0; t < cfg.horizon; ++t) {
    BehaviorContext ctx{u, w(t), 1, t + 1};
    const double p = binary_action_prob(policy, cfg, o, &ctx);
    const int a = s.action.bernoulli(p);
    const double r = kDpRewardObs * o.sum() +
                     cfg.gamma * kDpRewardLatent * (u * w(t)) + kDpRewardAction * a +
                     s.noise_reward.normal() * cfg.noise_scale;
    Eigen::Vector4d noise;
    for (int k = 0; k < 4; ++k) noise(k) = s.noise_obs.normal() * cfg.noise_scale;
    const Eigen::Vector4d o_next =
        kDpDecay * o + cfg.gamma * kDpLatentScale * dp_latent_vector(u, w(t)) +
        Eigen::Vector4d::Constant(kDpActionShift * a + kDpBias) + noise;
    const int row = out.row(i, t);
    out.observations.row(row) = o.transpose();
    out.actions(row, 0) = a;
    out.rewards(row) = r;
    out.next_observations.row(row) = o_next.transpose();
    o = o_next;
  }
}

void simulate_tumor_traj(const EnvConfig& cfg, const PolicySpec& policy,
                         const TumorTraits& tr, int group, int i, Streams& s,
                         Dataset& out, bool& clamped) {
  const auto& tp = cfg.tumor;
  double v = tp.v_init_min + (tp.v_init_max - tp.v_init_min) * s.init.uniform() * cfg.noise_scale;
  double c = 0.0;
  clamped = false;
  out.initial_obs(i, 0) = v;
  out.initial_obs(i, 1) = c;
  for (int t = 1; t <= cfg.horizon; ++t) {
    double p_radio = 0.0, p_chemo = 0.0;
    tumor_dose_probs(policy, cfg, v, group, t, p_radio, p_chemo);
    const int a_radio = s.action.bernoulli(p_radio);
    const int a_chemo = s.action.bernoulli(p_chemo);
    const double c_next = c / 2.0 + 5.0 * a_chemo;
    const double e_t = s.noise_obs.normal() * 0.01 * cfg.noise_scale;
    double v_next = (1.0 + tr.rho * std::log(tr.K / v) - tr.beta_c * c_next -
                     (tr.alpha * a_radio + tr.beta * a_radio * a_radio) + e_t) *
                    v;
    if (v_next < tp.v_min) {
      v_next = tp.v_min;
      clamped = true;
    }
    const double r_health = 1.5 * std::exp(-v_next);
    const double dose = a_radio + a_chemo;
    const double r_side = std::exp(-dose * dose);
    const double r_conf = cfg.gamma * (4.0 * sigmoid(static_cast<double>(group) - 2.0) -
                                       tumor_time_term(t));
    const double r = r_health + r_side + r_conf + s.noise_reward.normal() * cfg.noise_scale;
    const int row = out.row(i, t - 1);
    out.observations(row, 0) = v;
    out.observations(row, 1) = c;
    out.actions(row, 0) = a_radio;
    out.actions(row, 1) = a_chemo;
    out.rewards(row) = r;
    v = v_next;
    c = c_next;
    out.next_observations(row, 0) = v;
    out.next_observations(row, 1) = c;
  }
}

}  // namespace

Eigen::VectorXd policy_prob(const PolicySpec& policy, const EnvConfig& cfg,
                            const Eigen::VectorXd& obs, const BehaviorContext* ctx) {
  if (policy.kind == PolicyKind::Behavior && ctx == nullptr)
    throw std::invalid_argument("behavior policy requires latent context");
  if (policy.kind != PolicyKind::Behavior && ctx != nullptr)
    throw std::invalid_argument("target policies take no latent context");
  if (cfg.env_kind == EnvKind::TumorGrowth) {
    double p_radio = 0.0, p_chemo = 0.0;
    const int group = ctx ? ctx->group : 1;
    const int t = ctx ? ctx->t : 1;
    tumor_dose_probs(policy, cfg, obs(0), group, t, p_radio, p_chemo);
    Eigen::VectorXd probs(4);  // joint id = 2*A_r + A_c
    probs << (1 - p_radio) * (1 - p_chemo), (1 - p_radio) * p_chemo,
        p_radio * (1 - p_chemo), p_radio * p_chemo;
    return probs;
  }
  const double p = binary_action_prob(policy, cfg, obs, ctx);
  Eigen::VectorXd probs(2);
  probs << 1.0 - p, p;
  return probs;
}

LatentTable draw_latents(const EnvConfig& cfg) {
  cfg.validate();
  LatentTable lt;
  const int n = cfg.n_trajectories;
  const int horizon = cfg.horizon;
  lt.u.resize(n);
  lt.w.resize(horizon);
  if (cfg.env_kind == EnvKind::TumorGrowth) {
    lt.group.resize(n);
    lt.rho.resize(n);
    lt.K.resize(n);
    lt.beta_c.resize(n);
    lt.alpha.resize(n);
    lt.beta.resize(n);
    lt.volume_clamped.assign(n, false);
    for (int i = 0; i < n; ++i) {
      RngStream g = RngStream::derive(cfg.seed, StreamPurpose::Group, i);
      const int group = 1 + g.uniform_int(3);
      lt.group[i] = group;
      lt.rho(i) = cfg.tumor.rho;
      lt.K(i) = cfg.tumor.K;
      lt.beta_c(i) = cfg.tumor.beta_c[group - 1];
      lt.alpha(i) = cfg.tumor.alpha[group - 1];
      lt.beta(i) = cfg.tumor.beta[group - 1];
      lt.u(i) = static_cast<double>(group);
    }
    for (int t = 0; t < horizon; ++t) lt.w(t) = tumor_time_term(t + 1);
    return lt;
  }
  for (int i = 0; i < n; ++i) {
    RngStream su = RngStream::derive(cfg.seed, StreamPurpose::LatentU, i);
    lt.u(i) = su.normal() * cfg.latent_scale;
  }
  RngStream sw = RngStream::derive(cfg.seed, StreamPurpose::LatentW, 0);
  for (int t = 0; t < horizon; ++t) lt.w(t) = sw.normal() * cfg.latent_scale;
  return lt;
}

Dataset simulate(const EnvConfig& cfg, const PolicySpec& policy,
                 LatentTable& latents) {
  cfg.validate();
  if (latents.u.size() != cfg.n_trajectories || latents.w.size() != cfg.horizon)
    throw std::invalid_argument("latent table does not match env config");
  Dataset out = make_empty(cfg);
  for (int i = 0; i < cfg.n_trajectories; ++i) {
    Streams s = Streams::make(cfg.seed, static_cast<std::uint64_t>(i));
    switch (cfg.env_kind) {
      case EnvKind::Linear:
        simulate_linear_traj(cfg, policy, latents.u(i), latents.w, i, s, out);
        break;
      case EnvKind::DynamicProcess:
        simulate_dp_traj(cfg, policy, latents.u(i), latents.w, i, s, out);
        break;
      case EnvKind::TumorGrowth: {
        TumorTraits tr{latents.rho(i), latents.K(i), latents.beta_c(i),
                       latents.alpha(i), latents.beta(i)};
        bool clamped = false;
        simulate_tumor_traj(cfg, policy, tr, latents.group[i], i, s, out, clamped);
        latents.volume_clamped[i] = clamped;
        break;
      }
    }
  }
  return out;
}

std::pair<Dataset, LatentTable> generate(const EnvConfig& cfg, const PolicySpec& policy) {
  LatentTable lt = draw_latents(cfg);
  Dataset data = simulate(cfg, policy, lt);
  return {std::move(data), std::move(lt)};
}

std::pair<Dataset, LatentTable> gen_linear(const EnvConfig& cfg, const PolicySpec& policy) {
  if (cfg.env_kind != EnvKind::Linear)
    throw std::invalid_argument("gen_linear requires env_kind = Linear");
  return generate(cfg, policy);
}

std::pair<Dataset, LatentTable> gen_dynamic_process(const EnvConfig& cfg,
                                                    const PolicySpec& policy) {
  if (cfg.env_kind != EnvKind::DynamicProcess)
    throw std::invalid_argument("gen_dynamic_process requires env_kind = DynamicProcess");
  return generate(cfg, policy);
}

std::pair<Dataset, LatentTable> gen_tumor(const EnvConfig& cfg, const PolicySpec& policy) {
  if (cfg.env_kind != EnvKind::TumorGrowth)
    throw std::invalid_argument("gen_tumor requires env_kind = TumorGrowth");
  return generate(cfg, policy);
}

PolicyValue true_policy_value(const EnvConfig& cfg, const PolicySpec& policy,
                              int n_rollouts, std::uint64_t seed) {
  cfg.validate();
  if (n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");
  if (!policy.is_target())
    throw std::invalid_argument("true_policy_value requires a target policy");

  // One fresh world per rollout: private latents, noise and action streams,
  // so rollout means are i.i.d. and the standard error is 1/sqrt(n).
  double sum = 0.0, sum_sq = 0.0;
  EnvConfig one = cfg;
  one.n_trajectories = 1;
  for (int j = 0; j < n_rollouts; ++j) {
    one.seed = RngStream::derive_key(seed, 0x726f6c6cull, static_cast<std::uint64_t>(j));
    const Dataset d = generate(one, policy).first;
    const double mean_reward = d.rewards.mean();
    sum += mean_reward;
    sum_sq += mean_reward * mean_reward;
  }
  PolicyValue pv;
  pv.n_rollouts = n_rollouts;
  pv.eta = sum / n_rollouts;
  if (n_rollouts > 1) {
    const double var = (sum_sq - sum * sum / n_rollouts) / (n_rollouts - 1);
    pv.std_error = std::sqrt(std::max(var, 0.0) / n_rollouts);
  }
  return pv;
}

Eigen::VectorXd reward_conditional_mean(const EnvConfig& cfg, const Dataset& data,
                                        const LatentTable& latents) {
  Eigen::VectorXd mean(data.n_cells());
  for (int i = 0; i < data.n_traj; ++i) {
    for (int t = 0; t < data.horizon; ++t) {
      const int row = data.row(i, t);
      const double a = data.actions(row, 0);
      switch (cfg.env_kind) {
        case EnvKind::Linear:
          mean(row) = data.observations(row, 0) + 3.0 * a + 2.0 * latents.u(i) +
                      2.0 * latents.w(t);
          break;
        case EnvKind::DynamicProcess:
          mean(row) = kDpRewardObs * data.observations.row(row).sum() +
                      cfg.gamma * kDpRewardLatent * latents.u(i) * latents.w(t) +
                      kDpRewardAction * a;
          break;
        default:
          throw std::invalid_argument("reward_conditional_mean: unsupported env");
      }
    }
  }
  return mean;
}

Eigen::MatrixXd nextobs_conditional_mean(const EnvConfig& cfg, const Dataset& data,
                                         const LatentTable& latents) {
  Eigen::MatrixXd mean(data.n_cells(), data.obs_dim);
  for (int i = 0; i < data.n_traj; ++i) {
    for (int t = 0; t < data.horizon; ++t) {
      const int row = data.row(i, t);
      const double a = data.actions(row, 0);
      switch (cfg.env_kind) {
        case EnvKind::Linear:
          mean(row, 0) = 0.7 * data.observations(row, 0) + a + 2.0 * latents.u(i) +
                         2.0 * latents.w(t) - 0.5;
          break;
        case EnvKind::DynamicProcess: {
          const Eigen::Vector4d m =
              kDpDecay * data.observations.row(row).transpose().head<4>() +
              cfg.gamma * kDpLatentScale * dp_latent_vector(latents.u(i), latents.w(t)) +
              Eigen::Vector4d::Constant(kDpActionShift * a + kDpBias);
          mean.row(row) = m.transpose();
          break;
        }
        default:
          throw std::invalid_argument("nextobs_conditional_mean: unsupported env");
      }
    }
  }
  return mean;
}

Eigen::VectorXd reward_time_effects(const EnvConfig& cfg, const LatentTable& latents) {
  if (cfg.env_kind != EnvKind::Linear)
    throw std::invalid_argument("reward_time_effects defined for the linear env");
  return 2.0 * latents.w;
}

Eigen::VectorXd reward_traj_effects(const EnvConfig& cfg, const LatentTable& latents) {
  if (cfg.env_kind != EnvKind::Linear)
    throw std::invalid_argument("reward_traj_effects defined for the linear env");
  return 2.0 * latents.u;
}

double linear_conditional_value(const EnvConfig& cfg, const Dataset& data,
                                const LatentTable& latents, double p_treat) {
  if (cfg.env_kind != EnvKind::Linear)
    throw std::invalid_argument("linear_conditional_value requires the linear env");
  double total = 0.0;
  for (int i = 0; i < data.n_traj; ++i) {
    double m = data.initial_obs(i, 0);
    for (int t = 0; t < data.horizon; ++t) {
      const double latent = 2.0 * latents.u(i) + 2.0 * latents.w(t);
      total += m + 3.0 * p_treat + latent;
      m = 0.7 * m + p_treat + latent - 0.5;
    }
  }
  return total / static_cast<double>(data.n_cells());
}

}  // namespace twode::env
