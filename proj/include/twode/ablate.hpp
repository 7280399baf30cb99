// Constructors for the ablation variants of the two-way model and the
// one-way baselines, plus the shared train-and-evaluate ablation driver.

#ifndef TWODE_ABLATE_HPP
#define TWODE_ABLATE_HPP

#include <string>
#include <vector>

#include "twode/ope.hpp"
#include "twode/train.hpp"
#include "twode/types.hpp"

namespace twode::ablate {

enum class VariantKind { TWD, TWD_TO, TWD_MLP, OWD_NI, OWD_NT };

std::string to_string(VariantKind kind);
VariantKind variant_from_string(const std::string& name);

// TWD_TO drops the actor term (the loss weighting is ignored); TWD_MLP swaps
// the tensor trunk for a plain MLP; the OWD variants also remove one
// embedding table.
train::TrainOptions make_variant(VariantKind kind);

struct VariantRun {
  double eta_hat = 0.0;
  train::TrainReport report;
};

// Grid selection + full refit + plug-in value estimate for one dataset.
VariantRun evaluate_variant(const Dataset& data, const EnvConfig& env_cfg,
                            VariantKind kind,
                            const std::vector<train::HyperParams>& grid,
                            const ope::OpeConfig& ope_cfg);

struct AblationRow {
  VariantKind variant = VariantKind::TWD;
  double lmse = 0.0;
  double bias = 0.0;
  std::vector<double> estimates;
  int n_failures = 0;
};

// Trains every variant on the same R generated datasets (behavior policy)
// and reports LMSE/bias against eta_true. A variant whose training diverges
// on a repetition is recorded as a failure and the run continues.
std::vector<AblationRow> run_ablation(const EnvConfig& env_cfg,
                                      const std::vector<VariantKind>& variants,
                                      const std::vector<train::HyperParams>& grid,
                                      const ope::OpeConfig& ope_cfg, int repetitions,
                                      double eta_true, std::uint64_t master_seed);

}  // namespace twode::ablate

#endif  // TWODE_ABLATE_HPP
