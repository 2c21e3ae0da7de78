#pragma once

#include "evolal/policynet.hpp"

#include <span>
#include <vector>

namespace evolal {

// Behavior cloning; cross-entropy unless squared loss is requested.
FitResult train_bc(std::span<const Sample> samples, int action_count, const TrainConfig& config,
                   DataLoss loss = DataLoss::kCrossEntropy);

struct GPConfig {
  double length_scale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-4;  // sigma_n^2 on each observed return

  void validate() const;
};

// (post - pre) / (100 - pre), clamped to [-1, 1]; 0 when pre is already 100.
double normalized_learning_gain(double pre, double post);

Matrix se_kernel(const Matrix& a, const Matrix& b, const GPConfig& config);

/// Posterior mean of per-step values f given y_j = sum_{t in j} f_t + eps:
///   f_hat = K A^T (A K A^T + sigma_n^2 I)^{-1} y,
/// where `owner[t]` = j places step t in trajectory j. Throws ConditioningError
/// when the regularized Gram matrix is numerically singular.
Vector gp_posterior_from_kernel(const Matrix& step_kernel, std::span<const int> owner, const Vector& returns,
                                double noise_variance);

// Per-step reward labels for each trajectory.
std::vector<std::vector<double>> gp_redistribute(std::span<const Trajectory> trajectories,
                                                 std::span<const double> returns, const GPConfig& config);

struct DQNConfig {
  double gamma = 0.9;
  int target_sync = 100;  // updates between target-network copies
  TrainConfig train;

  void validate() const;
};

struct DQNResult {
  PolicyNet q;
  std::vector<double> loss_trace;  // mean TD loss per update
};

/// Offline fitted-Q on a fixed dataset: minimizes the mean squared TD error
/// against a periodically synced target network; the last step of each
/// trajectory bootstraps zero.
DQNResult train_dqn(std::span<const Trajectory> trajectories, std::span<const std::vector<double>> rewards,
                    int action_count, const DQNConfig& config);

// Softmax of Q-values at temperature 1.
Vector dqn_probs(const PolicyNet& q, const Vector& state);

}  // namespace evolal
