#pragma once

#include "evolal/baselines.hpp"
#include "evolal/ingest.hpp"
#include "evolal/serialize.hpp"
#include "evolal/synth.hpp"
#include "evolal/themes.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace evolal {

struct EvalConfig {
  std::vector<std::string> methods{"bc", "gp-dqn", "edm", "em-edm", "themes0", "themes1", "themes"};
  std::vector<uint64_t> seeds{0};
  int jobs = 1;
  FoldMode fold_mode = FoldMode::kCumulative;
  bool train_experts_only = true;
  bool test_experts_only = true;
  std::optional<Quantizer> quantizer;  // unset: training pre-test tertiles
  double alpha = 0.05;                 // significance level for rank comparisons
};

/// Every module config plus the run seed and output directory. The defaults
/// are the published settings: Q = 6, window 2, sparsity 1e-3, consistency 4,
/// O = 3 and 10 outer iterations.
struct RunConfig {
  uint64_t seed = 0;
  std::string output_dir = "out";
  ThemesConfig themes;  // its em.edm section is the EDM config of every EDM-based method
  TrainConfig bc;
  DataLoss bc_loss = DataLoss::kSquared;  // the squared distance to the one-hot action
  GPConfig gp;
  DQNConfig dqn;
  EvalConfig eval;
  EmitterConfig synth;

  const EDMConfig& edm() const { return themes.em.edm; }
  void validate() const;
};

std::string fold_mode_name(FoldMode m);
FoldMode parse_fold_mode(const std::string& name);

Json to_json(const RunConfig& c);
// Starts from the defaults; unknown keys and mistyped values are ConfigErrors.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace evolal
