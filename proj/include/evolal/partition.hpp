#pragma once

#include "evolal/admm.hpp"
#include "evolal/core.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evolal {

// One high-level state: a Gaussian over stacked windows.
struct ClusterProfile {
  Vector mean;       // R^{m w}
  Matrix precision;  // block-Toeplitz, symmetric PD
};

struct PartitionConfig {
  int clusters = 6;
  int window = 2;
  double sparsity = 1e-3;
  double consistency = 4.0;
  std::optional<double> decay_tau;  // seconds; median inter-step gap when unset
  double reward_strength = 1.0;
  int max_sweeps = 30;
  double admm_tol = 1e-4;
  int kmeans_iterations = 10;
  uint64_t seed = 0;

  void validate() const;
};

struct PartitionModel {
  PartitionConfig config;
  int state_dimension = 0;
  double tau = 1.0;  // decay constant actually used
  std::vector<ClusterProfile> profiles;
  std::vector<std::string> trajectory_ids;
  std::vector<std::vector<int>> window_labels;  // per training trajectory
  bool converged = false;
  double objective = 0.0;
  std::vector<double> objective_trace;  // accepted sweeps only
  int sweeps = 0;

  int clusters() const { return static_cast<int>(profiles.size()); }
  std::vector<std::vector<int>> step_labels() const;
};

// Gaussian log-density with a cached factorization; throws ModelStateError
// when the precision is not positive definite.
class GaussianScorer {
 public:
  explicit GaussianScorer(const ClusterProfile& profile);
  double loglik(const Vector& x) const;

 private:
  Vector mean_;
  Matrix lower_;  // precision = L L^T
  double constant_ = 0.0;
};

double window_loglik(const Vector& x, const ClusterProfile& profile);

// T x Q matrix of window log-likelihoods.
Matrix window_logliks(std::span<const Window> windows, std::span<const ClusterProfile> profiles);

/// Switch cost before each window: beta * exp(-dt / tau) * exp(-alpha |dr|).
/// Entry 0 is unused (no switch into the first window). `reward_gaps` may be
/// empty, which disables regulation.
std::vector<double> switch_penalties(std::span<const Window> windows, double beta, double tau,
                                     std::span<const double> reward_gaps, double alpha);

// Per-window reward differences r(end) - r(end-1) from per-step rewards.
std::vector<double> window_reward_gaps(std::span<const Window> windows, std::span<const double> step_rewards);

/// Exact minimizer of sum_t -loglik(t, label_t) + sum_{t>=1} pen_t [label_t != label_{t-1}]
/// by dynamic programming over the Q labels.
std::vector<int> assign_labels(const Matrix& loglik, std::span<const double> penalties);
std::vector<int> assign_labels(std::span<const Window> windows, std::span<const ClusterProfile> profiles,
                               std::span<const double> penalties);

double labeling_cost(const Matrix& loglik, std::span<const double> penalties, std::span<const int> labels);

// Covariance diagonal loading applied before the precision solve.
inline constexpr double kCovarianceRidge = 1e-6;

// `samples` holds one window per row. Needs at least two rows.
ClusterProfile fit_profile(const Matrix& samples, int block_size, double lambda, double admm_tol,
                           bool toeplitz = true);

/// Alternates label assignment and profile fitting from a seeded k-means++
/// start. `step_rewards`, when nonempty, holds one reward per step per
/// trajectory and enables reward regulation of the switch costs.
PartitionModel fit_partition(const Dataset& data, const PartitionConfig& config,
                             std::span<const std::vector<double>> step_rewards = {});

// Labels for an arbitrary trajectory under a fitted model (unregulated costs).
std::vector<int> label_windows(const PartitionModel& model, const Trajectory& trajectory,
                               std::span<const double> step_rewards = {});

// Total assigned log-likelihood of `data` under the model's stored labels.
double assigned_loglik(const PartitionModel& model, const Dataset& data);
int bic_parameter_count(const PartitionModel& model);
double bic_score(const PartitionModel& model, const Dataset& data);

double median_time_gap(const Dataset& data);

}  // namespace evolal
