#include "twode/ablate.hpp"

#include <stdexcept>

#include "twode/rng.hpp"

namespace twode::ablate {

std::string to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::TWD: return "TWD";
    case VariantKind::TWD_TO: return "TWD-TO";
    case VariantKind::TWD_MLP: return "TWD-MLP";
    case VariantKind::OWD_NI: return "OWD-NI";
    case VariantKind::OWD_NT: return "OWD-NT";
  }
  return "?";
}

VariantKind variant_from_string(const std::string& name) {
  if (name == "TWD") return VariantKind::TWD;
  if (name == "TWD-TO" || name == "TWD_TO") return VariantKind::TWD_TO;
  if (name == "TWD-MLP" || name == "TWD_MLP") return VariantKind::TWD_MLP;
  if (name == "OWD-NI" || name == "OWD_NI") return VariantKind::OWD_NI;
  if (name == "OWD-NT" || name == "OWD_NT") return VariantKind::OWD_NT;
  throw std::invalid_argument("unknown variant: " + name);
}

train::TrainOptions make_variant(VariantKind kind) {
  train::TrainOptions options;
  switch (kind) {
    case VariantKind::TWD:
      options.trunk = ntn::TrunkKind::Ntn;
      break;
    case VariantKind::TWD_TO:
      options.trunk = ntn::TrunkKind::Ntn;
      options.actor_term = false;
      break;
    case VariantKind::TWD_MLP:
      options.trunk = ntn::TrunkKind::MlpJoint;
      break;
    case VariantKind::OWD_NI:
      options.trunk = ntn::TrunkKind::MlpObsTime;
      break;
    case VariantKind::OWD_NT:
      options.trunk = ntn::TrunkKind::MlpObsTraj;
      break;
  }
  return options;
}

VariantRun evaluate_variant(const Dataset& data, const EnvConfig& env_cfg,
                            VariantKind kind,
                            const std::vector<train::HyperParams>& grid,
                            const ope::OpeConfig& ope_cfg) {
  const train::TrainOptions options = make_variant(kind);
  VariantRun run;
  run.report = train::select_and_refit(data, grid, options);
  if (ope_cfg.crossfit) {
    run.eta_hat = ope::crossfit_estimate(data, env_cfg, grid, options, ope_cfg);
  } else {
    run.eta_hat =
        ope::estimate_value(run.report.best_params, env_cfg, data, ope_cfg).eta;
  }
  return run;
}

std::vector<AblationRow> run_ablation(const EnvConfig& env_cfg,
                                      const std::vector<VariantKind>& variants,
                                      const std::vector<train::HyperParams>& grid,
                                      const ope::OpeConfig& ope_cfg, int repetitions,
                                      double eta_true, std::uint64_t master_seed) {
  if (variants.empty()) throw std::invalid_argument("no variants requested");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

  std::vector<AblationRow> rows(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) rows[v].variant = variants[v];

  for (int rep = 0; rep < repetitions; ++rep) {
    EnvConfig cfg = env_cfg;
    cfg.seed = RngStream::derive_key(master_seed, 0xDA7A, static_cast<std::uint64_t>(rep));
    const Dataset data = env::generate(cfg, PolicySpec::behavior()).first;

    std::vector<train::HyperParams> rep_grid = grid;
    for (auto& h : rep_grid)
      h.seed = RngStream::derive_key(master_seed, 0x7121, static_cast<std::uint64_t>(rep));
    ope::OpeConfig rep_ope = ope_cfg;
    rep_ope.seed = RngStream::derive_key(master_seed, 0x09E5, static_cast<std::uint64_t>(rep));

    for (std::size_t v = 0; v < variants.size(); ++v) {
      try {
        rows[v].estimates.push_back(
            evaluate_variant(data, cfg, variants[v], rep_grid, rep_ope).eta_hat);
      } catch (const train::DivergenceError&) {
        ++rows[v].n_failures;
      }
    }
  }

  for (auto& row : rows) {
    if (row.estimates.empty()) continue;
    const auto m = ope::metrics(row.estimates, eta_true);
    row.lmse = m.lmse;
    row.bias = m.bias;
  }
  return rows;
}

}  // namespace twode::ablate
