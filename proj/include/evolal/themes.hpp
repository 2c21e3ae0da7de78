#pragma once

#include "evolal/core.hpp"
#include "evolal/emedm.hpp"
#include "evolal/hlirl.hpp"
#include "evolal/partition.hpp"

#include <span>
#include <string>
#include <vector>

namespace evolal {

// kThemes1 skips reward regulation; kThemes0 also replaces the mixture by a
// single EDM policy.
enum class Variant { kThemes, kThemes1, kThemes0 };
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ThemesConfig {
  PartitionConfig partition;
  EMConfig em;
  IRLConfig irl;
  double gamma = 0.9;          // high-level discount
  int outer_iterations = 10;   // passes, the first one included
  double change_tol = 0.01;    // label and responsibility change for early stop
  int min_run = 2;             // shorter sub-trajectories are merged

  void validate() const;
};

// Steps [start, end] of one trajectory, all with partition label `label`.
struct SubTrajectory {
  std::string owner;
  int start = 0;
  int end = 0;
  int label = 0;

  int length() const { return end - start + 1; }
  std::vector<Sample> samples(const Trajectory& trajectory) const;
};

// Maximal constant runs, in order. Spans cover the trajectory exactly.
std::vector<SubTrajectory> cut_subtrajectories(const Trajectory& trajectory, std::span<const int> step_labels);

/// Relabels every run shorter than `min_run` to the adjacent run whose label
/// gives the run's steps the higher summed log-likelihood (`step_loglik` is
/// steps x labels; ties go left). A single remaining run is left alone.
void merge_short_runs(std::vector<int>& step_labels, const Matrix& step_loglik, int min_run);

// Steps x clusters log-likelihoods; step t uses the window ending at
// max(t, w - 1).
Matrix step_logliks(const PartitionModel& model, const Trajectory& trajectory);

struct IterationLog {
  double partition_objective = 0.0;
  double em_log_likelihood = 0.0;
  double irl_log_likelihood = 0.0;
  double label_change = 1.0;           // vs the previous pass, after label matching
  double responsibility_change = 1.0;  // mean total variation per step
};

struct ThemesModel {
  Variant variant = Variant::kThemes;
  ThemesConfig config;
  PartitionModel partition;
  MixtureModel mixture;
  RewardRegulator regulator;
  std::vector<SubTrajectory> segments;  // training sub-trajectories fed to EM
  std::vector<IterationLog> log;
  int iterations = 0;
  bool converged = false;

  // Throws ModelStateError when labels or shapes reference missing clusters.
  void check_consistency() const;
};

ThemesModel fit_themes(const Dataset& experts, const ThemesConfig& config, Variant variant);

// Causal view of step t: partition label, start of its run among steps
// [0, t], and the cluster posterior from the run's steps before t.
struct StepState {
  int label = 0;
  int run_start = 0;
  Vector posterior;
};
StepState themes_step_state(const ThemesModel& model, const Trajectory& trajectory, int t);

// Mixture action probabilities at step t (0-based).
Vector predict_themes(const ThemesModel& model, const Trajectory& trajectory, int t);

// One row per step: id, step, state..., label, posterior...
std::string labeled_state_csv(const ThemesModel& model, const Dataset& data);

}  // namespace evolal
