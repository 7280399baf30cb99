// The two-way deconfounder network: embedding tables for trajectory- and
// time-specific confounders, a neural tensor trunk (or the MLP trunks used
// by the ablation variants), a conditional-Gaussian transition head, an
// actor head, the joint loss and its exact analytic gradient.

#ifndef TWODE_NTN_HPP
#define TWODE_NTN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "twode/types.hpp"

namespace twode::ntn {

// Trunk producing the shared hidden vector. Ntn combines a bilinear tensor
// form u' W^[1:k] w with an affine map of [o, u, w]; the Mlp trunks feed the
// concatenated inputs through a plain two-hidden-layer perceptron.
enum class TrunkKind { Ntn, MlpJoint, MlpObsTime, MlpObsTraj };

std::string to_string(TrunkKind kind);

struct ModelDims {
  TrunkKind trunk = TrunkKind::Ntn;
  int obs_dim = 1;
  int n_actions = 2;
  int embed_dim = 2;   // d
  int ntn_slices = 2;  // k, bilinear slices
  int ntn_out = 16;    // shared hidden width (output of the trunk)
  int mlp_hidden = 64; // head / MLP trunk hidden width
  int n_traj = 0;
  int horizon = 0;
  double sigma_min = 1e-2;
  double sigma_max = 10.0;

  bool has_u() const { return trunk != TrunkKind::MlpObsTime; }
  bool has_w() const { return trunk != TrunkKind::MlpObsTraj; }
  int target_dim() const { return 1 + obs_dim; }  // (reward, next obs)
  int mlp_trunk_input() const {
    return obs_dim + (has_u() ? embed_dim : 0) + (has_w() ? embed_dim : 0);
  }
  void validate() const;
};

// Per-dataset target normalization stored with the model; predictions are
// de-standardized on the way out.
struct Standardizer {
  Eigen::VectorXd obs_mean, obs_std;  // obs_dim
  double reward_mean = 0.0;
  double reward_std = 1.0;

  static Standardizer identity(int obs_dim);
  static Standardizer from_dataset(const Dataset& data);
};

// Offsets of each parameter block inside the flat vector; doubles as the
// declared checkpoint order.
struct ParamLayout {
  enum class BlockKind { Weight, Bias, Embedding };
  struct Block {
    std::string name;
    int offset = 0;
    int rows = 0;
    int cols = 0;
    BlockKind kind = BlockKind::Weight;
    int size() const { return rows * cols; }
  };
  std::vector<Block> blocks;
  int total = 0;

  static ParamLayout make(const ModelDims& dims);
  const Block& at(const std::string& name) const;
  bool has(const std::string& name) const;
};

struct NtnParams {
  ModelDims dims;
  ParamLayout layout;
  Eigen::VectorXd theta;
  Standardizer standardizer;

  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> block(const std::string& name);
  int n_params() const { return layout.total; }
};

// Embeddings ~ N(0, 0.1^2); affine weights uniform with fan-in scaling;
// biases zero.
NtnParams init_params(const ModelDims& dims, std::uint64_t seed);

struct TransitionPrediction {
  Eigen::VectorXd mu;     // (1 + obs_dim), reward mean first
  Eigen::VectorXd sigma;  // positive, inside [sigma_min, sigma_max]
};

struct LossBreakdown {
  double l_transition = 0.0;  // Gaussian negative log-likelihood (sum over batch)
  double l_actor = 0.0;       // cross-entropy (sum over batch)
  double alpha = 0.0;
  double total = 0.0;
  int n_samples = 0;
  int n_transitions = 0;
};

// A training minibatch; rows reference dataset cells. Targets stay on the
// raw scale, the loss standardizes internally.
struct Batch {
  std::vector<int> traj;
  std::vector<int> time;
  Eigen::MatrixXd obs;       // B x obs_dim
  std::vector<int> action;   // joint action ids
  Eigen::VectorXd reward;    // B
  Eigen::MatrixXd next_obs;  // B x obs_dim
  std::vector<char> has_next;

  int size() const { return static_cast<int>(traj.size()); }
  static Batch from_cells(const Dataset& data, const std::vector<int>& cells);
};

// Single-sample trunk evaluation (the NTN forward map, or the MLP trunks for
// the ablation variants). For trunks without u or w the corresponding input
// is ignored.
Eigen::VectorXd ntn_forward(const Eigen::VectorXd& obs, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w, const NtnParams& params);

// mu unconstrained; sigma = min(softplus(raw) + sigma_min, sigma_max), in
// the model's standardized target space.
TransitionPrediction transition_head(int action, const Eigen::VectorXd& hidden,
                                     const NtnParams& params);

Eigen::VectorXd actor_head(const Eigen::VectorXd& hidden, const NtnParams& params);

// Joint loss over the batch: (1-alpha) * transition NLL + alpha * actor
// cross-entropy. alpha must lie in [0, 1); when actor_term is false the
// actor head is never evaluated and the total is the bare transition NLL
// (the transition-only ablation objective).
LossBreakdown loss(const Batch& batch, const NtnParams& params, double alpha,
                   bool actor_term = true);

// Analytic gradient of loss().total with the shape of params.theta. When
// breakdown is non-null it receives the forward losses from the same pass.
Eigen::VectorXd grad(const Batch& batch, const NtnParams& params, double alpha,
                     bool actor_term = true, LossBreakdown* breakdown = nullptr);

// Batched transition-head evaluation from explicit embedding rows (B x d
// each); mu and sigma come back in the standardized target space. Used by
// the rollout machinery, which owns the raw-scale conversion.
void predict_batch(const NtnParams& params, const Eigen::MatrixXd& obs,
                   const std::vector<int>& actions, const Eigen::MatrixXd& u,
                   const Eigen::MatrixXd& w, Eigen::MatrixXd& mu,
                   Eigen::MatrixXd& sigma);

// Checkpoint I/O: versioned binary header, dimension metadata, then the
// parameter vector in declared order. Round-trips bit-exactly.
void save_checkpoint(const NtnParams& params, const std::string& path);
NtnParams load_checkpoint(const std::string& path);

}  // namespace twode::ntn

#endif  // TWODE_NTN_HPP
