// Minibatch optimization of the joint loss: trajectory-level 75/25 split,
// adaptive-moment updates with weight decay, early stopping, and grid search
// over hyperparameter cells.

#ifndef TWODE_TRAIN_HPP
#define TWODE_TRAIN_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "twode/ntn.hpp"
#include "twode/types.hpp"

namespace twode::train {

struct HyperParams {
  double lr = 0.001;
  int batch_size = 512;
  double weight_decay = 1e-4;
  int embed_dim = 2;
  double loss_alpha = 0.5;
  int max_epochs = 500;
  int patience = 20;
  int ntn_slices = 2;
  std::uint64_t seed = 0;
  // architecture sizes (defaults per the model definition, all adjustable)
  int ntn_out = 16;
  int mlp_hidden = 64;
  double sigma_min = 1e-2;
  double sigma_max = 10.0;
  // held-out trajectory embeddings: transition-only refit steps per epoch
  int val_embed_steps = 3;
  int val_embed_warmup = 30;
  double train_fraction = 0.75;

  void validate() const;
};

// Variant plumbing filled by the ablation constructors; the default is the
// full two-way model.
struct TrainOptions {
  ntn::TrunkKind trunk = ntn::TrunkKind::Ntn;
  bool actor_term = true;
  bool standardize = true;  // target/observation normalization from the data
  const ntn::NtnParams* warm_start = nullptr;  // optional initial parameters
};

struct TrainReport {
  ntn::NtnParams best_params;
  double best_val_loss = 0.0;
  int best_epoch = -1;
  std::vector<std::pair<double, double>> curve;  // per-epoch (train, val) loss
  HyperParams chosen_hypers;
  int n_updates = 0;
  int grid_index = 0;
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(int epoch_)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch_)),
        epoch(epoch_) {}
  int epoch;
};

// Trajectory-granularity split: floor(fraction * N) training trajectories,
// the rest validation; every time index stays represented in training.
std::pair<std::vector<int>, std::vector<int>> split(const Dataset& data,
                                                    double fraction,
                                                    std::uint64_t seed);

// Full training run with early stopping on the validation loss. Embeddings
// of validation trajectories receive no training gradient; before each
// validation pass they are refit on the validation transition loss with all
// shared parameters frozen.
TrainReport fit(const Dataset& data, const HyperParams& hypers,
                const TrainOptions& options = {});

// Retrains on every cell for a fixed number of epochs (no validation); used
// for the final model after hyperparameter selection.
ntn::NtnParams refit_full(const Dataset& data, const HyperParams& hypers,
                          const TrainOptions& options, int n_epochs);

// Returns the report with minimal best_val_loss; ties break by grid order.
// Cells that diverge are skipped; if every cell diverges the error of the
// first cell is rethrown.
TrainReport grid_search(const Dataset& data, const std::vector<HyperParams>& grid,
                        const TrainOptions& options = {});

// Grid selection followed by a full-data refit for the winning epoch count.
// The returned report carries the refit parameters.
TrainReport select_and_refit(const Dataset& data, const std::vector<HyperParams>& grid,
                             const TrainOptions& options = {});

}  // namespace twode::train

#endif  // TWODE_TRAIN_HPP
