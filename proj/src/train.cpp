#include "twode/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "twode/rng.hpp"

namespace twode::train {

void HyperParams::validate() const {
  if (lr < 0.0) throw std::invalid_argument("lr must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (embed_dim < 1 || ntn_slices < 1 || ntn_out < 1 || mlp_hidden < 1)
    throw std::invalid_argument("architecture sizes must be positive");
  if (loss_alpha < 0.0 || loss_alpha >= 1.0)
    throw std::invalid_argument("loss_alpha must lie in [0, 1)");
  if (max_epochs < 1 || patience < 1)
    throw std::invalid_argument("max_epochs and patience must be >= 1");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("train fraction must lie in (0, 1)");
}

std::pair<std::vector<int>, std::vector<int>> split(const Dataset& data,
                                                    double fraction,
                                                    std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  if (data.n_traj < 2 || data.n_traj * data.horizon < 4)
    throw std::invalid_argument("dataset too small to split");

  std::vector<int> order(data.n_traj);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = RngStream::derive(seed, StreamPurpose::Split, 0);
  for (int i = data.n_traj - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(i + 1)]);

  int n_train = static_cast<int>(std::floor(fraction * data.n_traj));
  n_train = std::clamp(n_train, 1, data.n_traj - 1);
  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int> val_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {train_idx, val_idx};
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
  explicit AdamState(int n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// One adaptive-moment update restricted to coordinates where mask is 1.
void adam_update(ntn::NtnParams& params, AdamState& state, const Eigen::VectorXd& g,
                 double lr, const Eigen::VectorXd& mask) {
  ++state.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  state.m = kBeta1 * state.m + (1.0 - kBeta1) * g;
  state.v = kBeta2 * state.v + (1.0 - kBeta2) * g.cwiseProduct(g);
  const Eigen::VectorXd update =
      (state.m / c1).cwiseQuotient(((state.v / c2).cwiseSqrt().array() + kAdamEps).matrix());
  params.theta -= lr * mask.cwiseProduct(update);
}

std::vector<int> cells_of(const Dataset& data, const std::vector<int>& trajectories) {
  std::vector<int> cells;
  cells.reserve(trajectories.size() * data.horizon);
  for (const int i : trajectories)
    for (int t = 0; t < data.horizon; ++t) cells.push_back(data.row(i, t));
  return cells;
}

// L2 penalty on weights and embeddings; biases are left alone.
Eigen::VectorXd decay_mask_weights(const ntn::NtnParams& params) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(params.n_params());
  for (const auto& b : params.layout.blocks)
    if (b.kind != ntn::ParamLayout::BlockKind::Bias)
      mask.segment(b.offset, b.size()).setOnes();
  return mask;
}

Eigen::VectorXd row_mask(const ntn::NtnParams& params, const std::string& block,
                         const std::vector<int>& rows) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(params.n_params());
  if (!params.layout.has(block)) return mask;
  const auto& b = params.layout.at(block);
  // column-major storage: entry (r, c) sits at offset + c * rows + r
  for (const int r : rows)
    for (int c = 0; c < b.cols; ++c) mask(b.offset + c * b.rows + r) = 1.0;
  return mask;
}

ntn::ModelDims dims_for(const Dataset& data, const HyperParams& h,
                        const TrainOptions& options) {
  ntn::ModelDims dims;
  dims.trunk = options.trunk;
  dims.obs_dim = data.obs_dim;
  dims.n_actions = 1 << data.n_action_components;
  dims.embed_dim = h.embed_dim;
  dims.ntn_slices = h.ntn_slices;
  dims.ntn_out = h.ntn_out;
  dims.mlp_hidden = h.mlp_hidden;
  dims.n_traj = data.n_traj;
  dims.horizon = data.horizon;
  dims.sigma_min = h.sigma_min;
  dims.sigma_max = h.sigma_max;
  return dims;
}

double mean_loss(const Dataset& data, const std::vector<int>& cells,
                 const ntn::NtnParams& params, double alpha, bool actor_term) {
  const auto breakdown =
      ntn::loss(ntn::Batch::from_cells(data, cells), params, alpha, actor_term);
  return breakdown.total / std::max(breakdown.n_samples, 1);
}

// Trainer shared by fit() and refit_full().
struct Trainer {
  const Dataset& data;
  const HyperParams& hypers;
  const TrainOptions& options;
  ntn::NtnParams params;
  AdamState adam;
  Eigen::VectorXd decay_mask;
  Eigen::VectorXd update_mask;
  int n_updates = 0;

  Trainer(const Dataset& d, const HyperParams& h, const TrainOptions& o)
      : data(d),
        hypers(h),
        options(o),
        params(ntn::init_params(dims_for(d, h, o), h.seed)),
        adam(params.n_params()),
        decay_mask(decay_mask_weights(params)),
        update_mask(Eigen::VectorXd::Ones(params.n_params())) {
    if (o.warm_start != nullptr) {
      if (o.warm_start->theta.size() != params.theta.size())
        throw std::invalid_argument("warm start parameter shape mismatch");
      params.theta = o.warm_start->theta;
    }
    if (options.standardize)
      params.standardizer = ntn::Standardizer::from_dataset(d);
  }

  // One pass over shuffled cells; returns the mean per-sample loss.
  double run_epoch(const std::vector<int>& cells, int epoch) {
    std::vector<int> shuffled = cells;
    RngStream rng =
        RngStream::derive(hypers.seed, StreamPurpose::Shuffle, static_cast<std::uint64_t>(epoch));
    for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i)
      std::swap(shuffled[i], shuffled[rng.uniform_int(i + 1)]);

    double loss_sum = 0.0;
    int n_seen = 0;
    for (std::size_t start = 0; start < shuffled.size();
         start += static_cast<std::size_t>(hypers.batch_size)) {
      const std::size_t stop =
          std::min(shuffled.size(), start + static_cast<std::size_t>(hypers.batch_size));
      const std::vector<int> batch_cells(shuffled.begin() + start, shuffled.begin() + stop);
      const auto batch = ntn::Batch::from_cells(data, batch_cells);
      ntn::LossBreakdown breakdown;
      Eigen::VectorXd g =
          ntn::grad(batch, params, hypers.loss_alpha, options.actor_term, &breakdown);
      if (!std::isfinite(breakdown.total)) throw DivergenceError(epoch);
      g /= static_cast<double>(batch.size());
      if (hypers.weight_decay > 0.0)
        g += hypers.weight_decay * decay_mask.cwiseProduct(params.theta);
      adam_update(params, adam, g, hypers.lr, update_mask);
      ++n_updates;
      loss_sum += breakdown.total;
      n_seen += batch.size();
    }
    return loss_sum / std::max(n_seen, 1);
  }
};

// Transition-only refit of held-out trajectory embeddings with everything
// else frozen; keeps its own optimizer state across epochs.
struct ValEmbedRefitter {
  Eigen::VectorXd mask;
  AdamState adam;

  ValEmbedRefitter(const ntn::NtnParams& params, const std::vector<int>& val_traj)
      : mask(row_mask(params, "u_table", val_traj)), adam(params.n_params()) {}

  void refine(ntn::NtnParams& params, const Dataset& data, const std::vector<int>& cells,
              const HyperParams& hypers, int steps, int epoch) {
    if (mask.isZero(0.0)) return;
    const auto batch = ntn::Batch::from_cells(data, cells);
    for (int s = 0; s < steps; ++s) {
      Eigen::VectorXd g = ntn::grad(batch, params, 0.0, /*actor_term=*/false);
      if (!g.allFinite()) throw DivergenceError(epoch);
      g /= static_cast<double>(batch.size());
      if (hypers.weight_decay > 0.0)
        g += hypers.weight_decay * mask.cwiseProduct(params.theta);
      adam_update(params, adam, g, hypers.lr, mask);
    }
  }
};

}  // namespace

TrainReport fit(const Dataset& data, const HyperParams& hypers,
                const TrainOptions& options) {
  hypers.validate();
  data.validate();
  const auto [train_traj, val_traj] = split(data, hypers.train_fraction, hypers.seed);
  const std::vector<int> train_cells = cells_of(data, train_traj);
  const std::vector<int> val_cells = cells_of(data, val_traj);

  Trainer trainer(data, hypers, options);
  ValEmbedRefitter val_refit(trainer.params, val_traj);

  TrainReport report;
  report.chosen_hypers = hypers;
  report.best_val_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < hypers.max_epochs; ++epoch) {
    const double train_loss = trainer.run_epoch(train_cells, epoch);
    const int refit_steps =
        epoch == 0 ? hypers.val_embed_warmup + hypers.val_embed_steps : hypers.val_embed_steps;
    val_refit.refine(trainer.params, data, val_cells, hypers, refit_steps, epoch);
    const double val_loss =
        mean_loss(data, val_cells, trainer.params, hypers.loss_alpha, options.actor_term);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw DivergenceError(epoch);
    report.curve.emplace_back(train_loss, val_loss);

    if (val_loss < report.best_val_loss) {
      report.best_val_loss = val_loss;
      report.best_epoch = epoch;
      report.best_params = trainer.params;
      since_best = 0;
    } else if (++since_best >= hypers.patience) {
      break;
    }
  }
  report.n_updates = trainer.n_updates;
  return report;
}

ntn::NtnParams refit_full(const Dataset& data, const HyperParams& hypers,
                          const TrainOptions& options, int n_epochs) {
  hypers.validate();
  std::vector<int> all(data.n_traj);
  std::iota(all.begin(), all.end(), 0);
  const std::vector<int> cells = cells_of(data, all);
  Trainer trainer(data, hypers, options);
  for (int epoch = 0; epoch < n_epochs; ++epoch) trainer.run_epoch(cells, epoch);
  return trainer.params;
}

TrainReport grid_search(const Dataset& data, const std::vector<HyperParams>& grid,
                        const TrainOptions& options) {
  if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
  TrainReport best;
  bool have_best = false;
  int first_failure_epoch = -1;
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    try {
      TrainReport report = fit(data, grid[cell], options);
      report.grid_index = static_cast<int>(cell);
      if (!have_best || report.best_val_loss < best.best_val_loss) {
        best = std::move(report);
        have_best = true;
      }
    } catch (const DivergenceError& e) {
      if (first_failure_epoch < 0) first_failure_epoch = e.epoch;
    }
  }
  if (!have_best) throw DivergenceError(std::max(first_failure_epoch, 0));
  return best;
}

TrainReport select_and_refit(const Dataset& data, const std::vector<HyperParams>& grid,
                             const TrainOptions& options) {
  TrainReport winner = grid_search(data, grid, options);
  winner.best_params =
      refit_full(data, winner.chosen_hypers, options, winner.best_epoch + 1);
  return winner;
}

}  // namespace twode::train
