#include "twode/ntn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "twode/rng.hpp"

namespace twode::ntn {

namespace {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string to_string(TrunkKind kind) {
  switch (kind) {
    case TrunkKind::Ntn: return "ntn";
    case TrunkKind::MlpJoint: return "mlp";
    case TrunkKind::MlpObsTime: return "mlp-no-u";
    case TrunkKind::MlpObsTraj: return "mlp-no-w";
  }
  return "?";
}

void ModelDims::validate() const {
  if (obs_dim < 1 || n_actions < 2 || embed_dim < 1 || ntn_slices < 1 ||
      ntn_out < 1 || mlp_hidden < 1)
    throw std::invalid_argument("model dimensions must be positive");
  if (has_u() && n_traj < 1) throw std::invalid_argument("n_traj must be positive");
  if (has_w() && horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (sigma_min <= 0.0 || sigma_max <= sigma_min)
    throw std::invalid_argument("sigma clamp must satisfy 0 < sigma_min < sigma_max");
}

Standardizer Standardizer::identity(int obs_dim) {
  Standardizer s;
  s.obs_mean = Eigen::VectorXd::Zero(obs_dim);
  s.obs_std = Eigen::VectorXd::Ones(obs_dim);
  return s;
}

Standardizer Standardizer::from_dataset(const Dataset& data) {
  Standardizer s;
  s.obs_mean = data.observations.colwise().mean();
  const Eigen::VectorXd var = (data.observations.rowwise() - s.obs_mean.transpose())
                                  .array()
                                  .square()
                                  .colwise()
                                  .mean();
  s.obs_std = var.array().sqrt().max(1e-8);
  s.reward_mean = data.rewards.mean();
  const double rvar = (data.rewards.array() - s.reward_mean).square().mean();
  s.reward_std = std::max(std::sqrt(rvar), 1e-8);
  return s;
}

ParamLayout ParamLayout::make(const ModelDims& dims) {
  dims.validate();
  ParamLayout layout;
  auto add = [&layout](const std::string& name, int rows, int cols,
                       ParamLayout::BlockKind kind) {
    layout.blocks.push_back({name, layout.total, rows, cols, kind});
    layout.total += rows * cols;
  };
  const auto kW = BlockKind::Weight;
  const auto kB = BlockKind::Bias;
  const int d = dims.embed_dim;
  const int h = dims.mlp_hidden;
  if (dims.trunk == TrunkKind::Ntn) {
    for (int m = 0; m < dims.ntn_slices; ++m) add("W" + std::to_string(m), d, d, kW);
    add("M", dims.ntn_slices, dims.obs_dim + 2 * d, kW);
    add("b", dims.ntn_slices, 1, kB);
    add("fW", dims.ntn_out, dims.ntn_slices, kW);
    add("fb", dims.ntn_out, 1, kB);
  } else {
    const int in = dims.mlp_trunk_input();
    add("T1", h, in, kW);
    add("Tb1", h, 1, kB);
    add("T2", h, h, kW);
    add("Tb2", h, 1, kB);
    add("T3", dims.ntn_out, h, kW);
    add("Tb3", dims.ntn_out, 1, kB);
  }
  add("P1", h, dims.n_actions + dims.ntn_out, kW);
  add("Pb1", h, 1, kB);
  add("P2", h, h, kW);
  add("Pb2", h, 1, kB);
  add("P3", 2 * dims.target_dim(), h, kW);
  add("Pb3", 2 * dims.target_dim(), 1, kB);
  add("Q1", h, dims.ntn_out, kW);
  add("Qb1", h, 1, kB);
  add("Q2", h, h, kW);
  add("Qb2", h, 1, kB);
  add("Q3", dims.n_actions, h, kW);
  add("Qb3", dims.n_actions, 1, kB);
  if (dims.has_u()) add("u_table", dims.n_traj, d, BlockKind::Embedding);
  if (dims.has_w()) add("w_table", dims.horizon, d, BlockKind::Embedding);
  return layout;
}

const ParamLayout::Block& ParamLayout::at(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw std::out_of_range("no parameter block named " + name);
}

bool ParamLayout::has(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return true;
  return false;
}

Eigen::Map<const Eigen::MatrixXd> NtnParams::block(const std::string& name) const {
  const auto& b = layout.at(name);
  return {theta.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Eigen::MatrixXd> NtnParams::block(const std::string& name) {
  const auto& b = layout.at(name);
  return {theta.data() + b.offset, b.rows, b.cols};
}

NtnParams init_params(const ModelDims& dims, std::uint64_t seed) {
  NtnParams p;
  p.dims = dims;
  p.layout = ParamLayout::make(dims);
  p.theta = Eigen::VectorXd::Zero(p.layout.total);
  p.standardizer = Standardizer::identity(dims.obs_dim);

  RngStream rng = RngStream::derive(seed, StreamPurpose::ModelInit, 0);
  for (const auto& b : p.layout.blocks) {
    auto view = Eigen::Map<Eigen::MatrixXd>(p.theta.data() + b.offset, b.rows, b.cols);
    switch (b.kind) {
      case ParamLayout::BlockKind::Embedding:
        for (int c = 0; c < b.cols; ++c)
          for (int r = 0; r < b.rows; ++r) view(r, c) = 0.1 * rng.normal();
        break;
      case ParamLayout::BlockKind::Bias:
        view.setZero();
        break;
      case ParamLayout::BlockKind::Weight: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(b.cols));
        for (int c = 0; c < b.cols; ++c)
          for (int r = 0; r < b.rows; ++r) view(r, c) = rng.uniform_range(-bound, bound);
        break;
      }
    }
  }
  return p;
}

Batch Batch::from_cells(const Dataset& data, const std::vector<int>& cells) {
  Batch b;
  const int n = static_cast<int>(cells.size());
  b.traj.resize(n);
  b.time.resize(n);
  b.obs.resize(n, data.obs_dim);
  b.action.resize(n);
  b.reward.resize(n);
  b.next_obs.resize(n, data.obs_dim);
  b.has_next.resize(n);
  for (int s = 0; s < n; ++s) {
    const int cell = cells[s];
    const int i = cell / data.horizon;
    const int t = cell % data.horizon;
    b.traj[s] = i;
    b.time[s] = t;
    b.obs.row(s) = data.observations.row(cell);
    b.action[s] = data.action_id(i, t);
    b.reward(s) = data.rewards(cell);
    b.next_obs.row(s) = data.next_observations.row(cell);
    b.has_next[s] = data.has_next(i, t) ? 1 : 0;
  }
  return b;
}

namespace {

// Caches from the batched forward pass, consumed by the backward pass.
struct Forward {
  Eigen::MatrixXd u, w;            // B x d gathered embeddings
  Eigen::MatrixXd trunk_in;        // NTN: [obs u w]; MLP trunks: their input
  Eigen::MatrixXd h1;              // NTN: tanh of the pre-activation
  Eigen::MatrixXd a1, a2;          // MLP trunk activations
  Eigen::MatrixXd hidden;          // B x ntn_out
  Eigen::MatrixXd p_in, p_a1, p_a2, p_raw;
  Eigen::MatrixXd mu, sigma, sig_gate;
  Eigen::MatrixXd q_a1, q_a2, logits, probs;
  Eigen::MatrixXd phi;             // standardized targets
};

Eigen::MatrixXd standardize_obs(const Eigen::MatrixXd& obs, const Standardizer& s) {
  return (obs.rowwise() - s.obs_mean.transpose()).array().rowwise() /
         s.obs_std.transpose().array();
}

// Trunk evaluation from explicit embedding rows (f.u / f.w already set).
void trunk_forward_embedded(const NtnParams& p, const Eigen::MatrixXd& raw_obs,
                            Forward& f) {
  const auto& dims = p.dims;
  const int n = static_cast<int>(raw_obs.rows());
  const Eigen::MatrixXd obs = standardize_obs(raw_obs, p.standardizer);

  if (dims.trunk == TrunkKind::Ntn) {
    f.trunk_in.resize(n, dims.obs_dim + 2 * dims.embed_dim);
    f.trunk_in << obs, f.u, f.w;
    Eigen::MatrixXd pre = f.trunk_in * p.block("M").transpose();
    pre.rowwise() += p.block("b").col(0).transpose();
    for (int m = 0; m < dims.ntn_slices; ++m) {
      const auto slice = p.block("W" + std::to_string(m));
      pre.col(m) += ((f.u * slice).cwiseProduct(f.w)).rowwise().sum();
    }
    f.h1 = pre.array().tanh();
    f.hidden = f.h1 * p.block("fW").transpose();
    f.hidden.rowwise() += p.block("fb").col(0).transpose();
  } else {
    f.trunk_in.resize(n, dims.mlp_trunk_input());
    if (dims.trunk == TrunkKind::MlpJoint)
      f.trunk_in << obs, f.u, f.w;
    else if (dims.trunk == TrunkKind::MlpObsTime)
      f.trunk_in << obs, f.w;
    else
      f.trunk_in << obs, f.u;
    f.a1 = ((f.trunk_in * p.block("T1").transpose()).rowwise() +
            p.block("Tb1").col(0).transpose())
               .array()
               .tanh();
    f.a2 = ((f.a1 * p.block("T2").transpose()).rowwise() +
            p.block("Tb2").col(0).transpose())
               .array()
               .tanh();
    f.hidden = (f.a2 * p.block("T3").transpose()).rowwise() +
               p.block("Tb3").col(0).transpose();
  }
}

void trunk_forward(const NtnParams& p, const std::vector<int>& traj,
                   const std::vector<int>& time, const Eigen::MatrixXd& raw_obs,
                   Forward& f) {
  const auto& dims = p.dims;
  const int n = static_cast<int>(traj.size());
  const int d = dims.embed_dim;
  f.u = Eigen::MatrixXd::Zero(n, d);
  f.w = Eigen::MatrixXd::Zero(n, d);
  if (dims.has_u()) {
    const auto table = p.block("u_table");
    for (int s = 0; s < n; ++s) f.u.row(s) = table.row(traj[s]);
  }
  if (dims.has_w()) {
    const auto table = p.block("w_table");
    for (int s = 0; s < n; ++s) f.w.row(s) = table.row(time[s]);
  }
  trunk_forward_embedded(p, raw_obs, f);
}

void transition_forward(const NtnParams& p, const std::vector<int>& action, Forward& f) {
  const auto& dims = p.dims;
  const int n = static_cast<int>(f.hidden.rows());
  const int td = dims.target_dim();
  f.p_in = Eigen::MatrixXd::Zero(n, dims.n_actions + dims.ntn_out);
  for (int s = 0; s < n; ++s) {
    if (action[s] < 0 || action[s] >= dims.n_actions)
      throw std::invalid_argument("unknown action id " + std::to_string(action[s]));
    f.p_in(s, action[s]) = 1.0;
  }
  f.p_in.rightCols(dims.ntn_out) = f.hidden;
  f.p_a1 = ((f.p_in * p.block("P1").transpose()).rowwise() +
            p.block("Pb1").col(0).transpose())
               .array()
               .tanh();
  f.p_a2 = ((f.p_a1 * p.block("P2").transpose()).rowwise() +
            p.block("Pb2").col(0).transpose())
               .array()
               .tanh();
  f.p_raw = (f.p_a2 * p.block("P3").transpose()).rowwise() +
            p.block("Pb3").col(0).transpose();

  f.mu = f.p_raw.leftCols(td);
  f.sigma.resize(n, td);
  f.sig_gate.resize(n, td);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < td; ++j) {
      const double raw = f.p_raw(s, td + j);
      const double sp = softplus(raw) + dims.sigma_min;
      if (sp < dims.sigma_max) {
        f.sigma(s, j) = sp;
        f.sig_gate(s, j) = logistic(raw);
      } else {
        f.sigma(s, j) = dims.sigma_max;
        f.sig_gate(s, j) = 0.0;  // clamped: no gradient through sigma
      }
    }
  }
}

void actor_forward(const NtnParams& p, Forward& f) {
  f.q_a1 = ((f.hidden * p.block("Q1").transpose()).rowwise() +
            p.block("Qb1").col(0).transpose())
               .array()
               .tanh();
  f.q_a2 = ((f.q_a1 * p.block("Q2").transpose()).rowwise() +
            p.block("Qb2").col(0).transpose())
               .array()
               .tanh();
  f.logits = (f.q_a2 * p.block("Q3").transpose()).rowwise() +
             p.block("Qb3").col(0).transpose();
  f.probs.resize(f.logits.rows(), f.logits.cols());
  for (int s = 0; s < f.logits.rows(); ++s) {
    const Eigen::RowVectorXd shifted =
        (f.logits.row(s).array() - f.logits.row(s).maxCoeff()).matrix();
    const Eigen::RowVectorXd e = shifted.array().exp();
    f.probs.row(s) = e / e.sum();
  }
}

void target_forward(const NtnParams& p, const Batch& batch, Forward& f) {
  const auto& s = p.standardizer;
  f.phi.resize(batch.size(), p.dims.target_dim());
  f.phi.col(0) = (batch.reward.array() - s.reward_mean) / s.reward_std;
  f.phi.rightCols(p.dims.obs_dim) = standardize_obs(batch.next_obs, s);
}

LossBreakdown compute_losses(const Batch& batch, const Forward& f, double alpha,
                             bool actor_term) {
  LossBreakdown out;
  out.alpha = alpha;
  out.n_samples = batch.size();
  for (int s = 0; s < batch.size(); ++s) {
    if (!batch.has_next[s]) continue;
    ++out.n_transitions;
    for (int j = 0; j < f.mu.cols(); ++j) {
      const double resid = f.mu(s, j) - f.phi(s, j);
      const double sig = f.sigma(s, j);
      out.l_transition += 0.5 * (resid * resid / (sig * sig) + 2.0 * std::log(sig));
    }
  }
  if (actor_term) {
    for (int s = 0; s < batch.size(); ++s)
      out.l_actor += -std::log(std::max(f.probs(s, batch.action[s]), 1e-300));
    out.total = (1.0 - alpha) * out.l_transition + alpha * out.l_actor;
  } else {
    out.total = out.l_transition;
  }
  return out;
}

void run_forward(const Batch& batch, const NtnParams& p, bool actor_term, Forward& f) {
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  trunk_forward(p, batch.traj, batch.time, batch.obs, f);
  transition_forward(p, batch.action, f);
  if (actor_term) actor_forward(p, f);
  target_forward(p, batch, f);
}

void check_alpha(double alpha) {
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("loss weighting alpha must lie in [0, 1)");
}

}  // namespace

Eigen::VectorXd ntn_forward(const Eigen::VectorXd& obs, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w, const NtnParams& params) {
  const auto& dims = params.dims;
  if (obs.size() != dims.obs_dim) throw std::invalid_argument("observation dim mismatch");
  if ((dims.has_u() && u.size() != dims.embed_dim) ||
      (dims.has_w() && w.size() != dims.embed_dim))
    throw std::invalid_argument("embedding dim mismatch");

  // One-row pass through the batched path with the embeddings injected.
  Forward f;
  f.u = Eigen::MatrixXd::Zero(1, dims.embed_dim);
  f.w = Eigen::MatrixXd::Zero(1, dims.embed_dim);
  if (dims.has_u()) f.u.row(0) = u.transpose();
  if (dims.has_w()) f.w.row(0) = w.transpose();
  trunk_forward_embedded(params, obs.transpose(), f);
  return f.hidden.row(0).transpose();
}

TransitionPrediction transition_head(int action, const Eigen::VectorXd& hidden,
                                     const NtnParams& params) {
  if (hidden.size() != params.dims.ntn_out)
    throw std::invalid_argument("hidden width mismatch");
  Forward f;
  f.hidden = hidden.transpose();
  transition_forward(params, {action}, f);
  TransitionPrediction pred;
  pred.mu = f.mu.row(0).transpose();
  pred.sigma = f.sigma.row(0).transpose();
  return pred;
}

Eigen::VectorXd actor_head(const Eigen::VectorXd& hidden, const NtnParams& params) {
  if (hidden.size() != params.dims.ntn_out)
    throw std::invalid_argument("hidden width mismatch");
  Forward f;
  f.hidden = hidden.transpose();
  actor_forward(params, f);
  return f.probs.row(0).transpose();
}

LossBreakdown loss(const Batch& batch, const NtnParams& params, double alpha,
                   bool actor_term) {
  check_alpha(alpha);
  Forward f;
  run_forward(batch, params, actor_term, f);
  return compute_losses(batch, f, alpha, actor_term);
}

Eigen::VectorXd grad(const Batch& batch, const NtnParams& params, double alpha,
                     bool actor_term, LossBreakdown* breakdown) {
  check_alpha(alpha);
  const auto& dims = params.dims;
  Forward f;
  run_forward(batch, params, actor_term, f);
  if (breakdown != nullptr) *breakdown = compute_losses(batch, f, alpha, actor_term);

  Eigen::VectorXd grad_theta = Eigen::VectorXd::Zero(params.n_params());
  auto gblock = [&](const std::string& name) {
    const auto& b = params.layout.at(name);
    return Eigen::Map<Eigen::MatrixXd>(grad_theta.data() + b.offset, b.rows, b.cols);
  };

  const int n = batch.size();
  const int td = dims.target_dim();
  const double w_trans = actor_term ? (1.0 - alpha) : 1.0;

  // transition head backward
  Eigen::MatrixXd d_raw = Eigen::MatrixXd::Zero(n, 2 * td);
  for (int s = 0; s < n; ++s) {
    if (!batch.has_next[s]) continue;
    for (int j = 0; j < td; ++j) {
      const double sig = f.sigma(s, j);
      const double resid = f.mu(s, j) - f.phi(s, j);
      d_raw(s, j) = w_trans * resid / (sig * sig);
      d_raw(s, td + j) =
          w_trans * (1.0 / sig - resid * resid / (sig * sig * sig)) * f.sig_gate(s, j);
    }
  }
  gblock("P3") += d_raw.transpose() * f.p_a2;
  gblock("Pb3").col(0) += d_raw.colwise().sum().transpose();
  Eigen::MatrixXd d = (d_raw * params.block("P3"))
                          .cwiseProduct((1.0 - f.p_a2.array().square()).matrix());
  gblock("P2") += d.transpose() * f.p_a1;
  gblock("Pb2").col(0) += d.colwise().sum().transpose();
  d = (d * params.block("P2")).cwiseProduct((1.0 - f.p_a1.array().square()).matrix());
  gblock("P1") += d.transpose() * f.p_in;
  gblock("Pb1").col(0) += d.colwise().sum().transpose();
  Eigen::MatrixXd d_hidden = (d * params.block("P1")).rightCols(dims.ntn_out);

  // actor head backward
  if (actor_term && alpha > 0.0) {
    Eigen::MatrixXd d_logits = f.probs;
    for (int s = 0; s < n; ++s) d_logits(s, batch.action[s]) -= 1.0;
    d_logits *= alpha;
    gblock("Q3") += d_logits.transpose() * f.q_a2;
    gblock("Qb3").col(0) += d_logits.colwise().sum().transpose();
    Eigen::MatrixXd dq = (d_logits * params.block("Q3"))
                             .cwiseProduct((1.0 - f.q_a2.array().square()).matrix());
    gblock("Q2") += dq.transpose() * f.q_a1;
    gblock("Qb2").col(0) += dq.colwise().sum().transpose();
    dq = (dq * params.block("Q2")).cwiseProduct((1.0 - f.q_a1.array().square()).matrix());
    gblock("Q1") += dq.transpose() * f.hidden;
    gblock("Qb1").col(0) += dq.colwise().sum().transpose();
    d_hidden += dq * params.block("Q1");
  }

  // trunk backward
  Eigen::MatrixXd d_u = Eigen::MatrixXd::Zero(n, dims.embed_dim);
  Eigen::MatrixXd d_w = Eigen::MatrixXd::Zero(n, dims.embed_dim);
  if (dims.trunk == TrunkKind::Ntn) {
    gblock("fW") += d_hidden.transpose() * f.h1;
    gblock("fb").col(0) += d_hidden.colwise().sum().transpose();
    const Eigen::MatrixXd d_pre = (d_hidden * params.block("fW"))
                                      .cwiseProduct((1.0 - f.h1.array().square()).matrix());
    gblock("b").col(0) += d_pre.colwise().sum().transpose();
    gblock("M") += d_pre.transpose() * f.trunk_in;
    const Eigen::MatrixXd d_tau = d_pre * params.block("M");
    d_u = d_tau.middleCols(dims.obs_dim, dims.embed_dim);
    d_w = d_tau.rightCols(dims.embed_dim);
    for (int m = 0; m < dims.ntn_slices; ++m) {
      const auto slice = params.block("W" + std::to_string(m));
      const Eigen::VectorXd dm = d_pre.col(m);
      gblock("W" + std::to_string(m)) += f.u.transpose() * dm.asDiagonal() * f.w;
      d_u += ((f.w * slice.transpose()).array().colwise() * dm.array()).matrix();
      d_w += ((f.u * slice).array().colwise() * dm.array()).matrix();
    }
  } else {
    gblock("T3") += d_hidden.transpose() * f.a2;
    gblock("Tb3").col(0) += d_hidden.colwise().sum().transpose();
    Eigen::MatrixXd dt = (d_hidden * params.block("T3"))
                             .cwiseProduct((1.0 - f.a2.array().square()).matrix());
    gblock("T2") += dt.transpose() * f.a1;
    gblock("Tb2").col(0) += dt.colwise().sum().transpose();
    dt = (dt * params.block("T2")).cwiseProduct((1.0 - f.a1.array().square()).matrix());
    gblock("T1") += dt.transpose() * f.trunk_in;
    gblock("Tb1").col(0) += dt.colwise().sum().transpose();
    const Eigen::MatrixXd d_in = dt * params.block("T1");
    if (dims.trunk == TrunkKind::MlpJoint) {
      d_u = d_in.middleCols(dims.obs_dim, dims.embed_dim);
      d_w = d_in.rightCols(dims.embed_dim);
    } else if (dims.trunk == TrunkKind::MlpObsTime) {
      d_w = d_in.rightCols(dims.embed_dim);
    } else {
      d_u = d_in.rightCols(dims.embed_dim);
    }
  }

  if (dims.has_u()) {
    auto g = gblock("u_table");
    for (int s = 0; s < n; ++s) g.row(batch.traj[s]) += d_u.row(s);
  }
  if (dims.has_w()) {
    auto g = gblock("w_table");
    for (int s = 0; s < n; ++s) g.row(batch.time[s]) += d_w.row(s);
  }
  return grad_theta;
}

void predict_batch(const NtnParams& params, const Eigen::MatrixXd& obs,
                   const std::vector<int>& actions, const Eigen::MatrixXd& u,
                   const Eigen::MatrixXd& w, Eigen::MatrixXd& mu,
                   Eigen::MatrixXd& sigma) {
  const auto& dims = params.dims;
  if (obs.cols() != dims.obs_dim) throw std::invalid_argument("observation dim mismatch");
  if (u.cols() != dims.embed_dim || w.cols() != dims.embed_dim ||
      u.rows() != obs.rows() || w.rows() != obs.rows())
    throw std::invalid_argument("embedding shape mismatch");
  Forward f;
  f.u = u;
  f.w = w;
  trunk_forward_embedded(params, obs, f);
  transition_forward(params, actions, f);
  mu = std::move(f.mu);
  sigma = std::move(f.sigma);
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return value;
}

constexpr char kMagic[8] = {'T', 'W', 'D', 'E', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const NtnParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  const auto& d = params.dims;
  write_pod(out, static_cast<std::int32_t>(d.trunk));
  for (const int v : {d.obs_dim, d.n_actions, d.embed_dim, d.ntn_slices, d.ntn_out,
                      d.mlp_hidden, d.n_traj, d.horizon})
    write_pod(out, static_cast<std::int32_t>(v));
  write_pod(out, d.sigma_min);
  write_pod(out, d.sigma_max);
  write_pod(out, params.standardizer.reward_mean);
  write_pod(out, params.standardizer.reward_std);
  out.write(reinterpret_cast<const char*>(params.standardizer.obs_mean.data()),
            static_cast<std::streamsize>(sizeof(double)) * d.obs_dim);
  out.write(reinterpret_cast<const char*>(params.standardizer.obs_std.data()),
            static_cast<std::streamsize>(sizeof(double)) * d.obs_dim);
  write_pod(out, static_cast<std::uint64_t>(params.theta.size()));
  out.write(reinterpret_cast<const char*>(params.theta.data()),
            static_cast<std::streamsize>(sizeof(double)) * params.theta.size());
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

NtnParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a model checkpoint: " + path);
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw std::runtime_error("unsupported checkpoint version");

  ModelDims d;
  d.trunk = static_cast<TrunkKind>(read_pod<std::int32_t>(in));
  d.obs_dim = read_pod<std::int32_t>(in);
  d.n_actions = read_pod<std::int32_t>(in);
  d.embed_dim = read_pod<std::int32_t>(in);
  d.ntn_slices = read_pod<std::int32_t>(in);
  d.ntn_out = read_pod<std::int32_t>(in);
  d.mlp_hidden = read_pod<std::int32_t>(in);
  d.n_traj = read_pod<std::int32_t>(in);
  d.horizon = read_pod<std::int32_t>(in);
  d.sigma_min = read_pod<double>(in);
  d.sigma_max = read_pod<double>(in);

  NtnParams p;
  p.dims = d;
  p.layout = ParamLayout::make(d);
  p.standardizer.reward_mean = read_pod<double>(in);
  p.standardizer.reward_std = read_pod<double>(in);
  p.standardizer.obs_mean.resize(d.obs_dim);
  p.standardizer.obs_std.resize(d.obs_dim);
  in.read(reinterpret_cast<char*>(p.standardizer.obs_mean.data()),
          static_cast<std::streamsize>(sizeof(double)) * d.obs_dim);
  in.read(reinterpret_cast<char*>(p.standardizer.obs_std.data()),
          static_cast<std::streamsize>(sizeof(double)) * d.obs_dim);
  const auto n = read_pod<std::uint64_t>(in);
  if (n != static_cast<std::uint64_t>(p.layout.total))
    throw std::runtime_error("checkpoint parameter count mismatch");
  p.theta.resize(p.layout.total);
  in.read(reinterpret_cast<char*>(p.theta.data()),
          static_cast<std::streamsize>(sizeof(double)) * p.layout.total);
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return p;
}

}  // namespace twode::ntn
