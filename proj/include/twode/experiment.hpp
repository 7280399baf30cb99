// Experiment driver: config parsing, the experiment recipes, result I/O and
// reproducibility manifests.

#ifndef TWODE_EXPERIMENT_HPP
#define TWODE_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "twode/ope.hpp"
#include "twode/train.hpp"
#include "twode/types.hpp"

namespace twode::experiment {

enum class Recipe { LinearProps, DpSweep, TumorSweep, Sensitivity, Ablation };

std::string to_string(Recipe recipe);
Recipe recipe_from_string(const std::string& name);

struct ExperimentSpec {
  Recipe recipe = Recipe::DpSweep;
  EnvConfig env;
  std::vector<std::string> methods;  // variants, or assumptions for linear-props
  std::vector<std::string> targets;
  std::vector<int> n_list;
  std::vector<double> gamma_list;
  int repetitions = 20;
  int truth_rollouts = 10000;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  std::vector<train::HyperParams> grid;
  ope::OpeConfig ope;
  int linear_ope_rollouts = 50;
  int workers = 1;
  bool deterministic = false;

  void validate() const;
  std::string canonical_text() const;  // resolved spec; feeds the hash
};

// Parses and fully validates a configuration file; unknown keys are hard
// errors, defaults are filled per recipe.
ExperimentSpec parse_config(const std::string& path);
ExperimentSpec parse_config_text(const std::string& text,
                                 const std::string& origin = "<string>");

// Shrinks the workload for smoke runs: fewer repetitions, smaller N and
// horizon, shorter training, fewer rollouts, first grid cell only.
void apply_fast_mode(ExperimentSpec& spec);

// Per-cell seed: a pure function of (master seed, N, gamma, method,
// repetition), so any cell can be re-run in isolation.
std::uint64_t cell_seed(std::uint64_t master_seed, int n, double gamma,
                        const std::string& method, int repetition);

struct RunManifest {
  std::string version;
  std::string recipe;
  std::string spec_hash;
  std::uint64_t master_seed = 0;
  double wall_clock_s = 0.0;
  std::vector<std::uint64_t> cell_seeds;
  std::vector<std::pair<std::string, std::string>> files;  // name -> fnv64
  std::vector<std::string> failed_cells;

  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

// Executes the recipe, writes result CSVs and the manifest into
// spec.output_dir, and returns the manifest. Failed cells are logged and
// skipped; the run continues.
RunManifest run(const ExperimentSpec& spec);

// Verifies that an output directory matches its manifest: every listed file
// present with the recorded hash, and no unlisted files. Returns the list of
// problems (empty when clean).
std::vector<std::string> verify_manifest(const std::string& dir);

}  // namespace twode::experiment

#endif  // TWODE_EXPERIMENT_HPP
