#pragma once

#include "evolal/core.hpp"

#include <span>
#include <vector>

namespace evolal {

// One step of a high-level demonstration.
struct HighLevelStep {
  int state = 0;   // partition label
  int action = 0;  // policy-cluster label
};
using HighLevelDemo = std::vector<HighLevelStep>;

/// Finite MDP over Q states and O actions. Row s * O + a of `transitions`
/// is the next-state distribution for (s, a).
struct HighLevelMDP {
  int states = 0;
  int actions = 0;
  double gamma = 0.9;
  Matrix transitions;

  void validate() const;
  int row(int s, int a) const { return s * actions + a; }
};

/// Laplace-smoothed transition estimate (count(s,a,s') + 1) / (count(s,a) + Q)
/// from consecutive steps within each demo.
HighLevelMDP build_high_level_mdp(std::span<const HighLevelDemo> demos, int states, int actions, double gamma = 0.9);

struct ValueIterationResult {
  Matrix q;                        // Q x O
  std::vector<double> residuals;  // sup-norm change per sweep
  int iterations = 0;
};

/// Max-backup value iteration from Q = 0. The returned table's Bellman
/// residual is at most gamma times the last recorded residual, below `tol`.
ValueIterationResult value_iteration(const HighLevelMDP& mdp, const Matrix& reward, double tol = 1e-8,
                                     int max_iter = 100000);

double bellman_residual(const HighLevelMDP& mdp, const Matrix& reward, const Matrix& q);

// Row-wise softmax of beta * Q.
Matrix boltzmann_policy(const Matrix& q, double beta);
// Deterministic greedy policy, ties to the lowest action.
std::vector<int> greedy_policy(const Matrix& q);

struct IRLConfig {
  double beta = 5.0;
  int steps = 200;
  double learning_rate = 0.1;
  double fd_step = 1e-4;
  double inner_tol = 1e-12;
  int max_halvings = 40;

  void validate() const;
};

struct RewardRegulator {
  Matrix reward;  // Q x O, max |entry| <= 1
  double beta = 5.0;
  double log_likelihood = 0.0;  // at the unscaled maximizer
  std::vector<double> likelihood_trace;  // accepted steps
};

double demo_log_likelihood(const HighLevelMDP& mdp, const Matrix& reward, std::span<const HighLevelDemo> demos,
                           double beta, double tol = 1e-12);

/// Gradient ascent on sum_t log pi_R(a_t | s_t) with a central-difference
/// gradient and backtracking that halves the step until the likelihood does
/// not decrease. Starts from R = 0; the result is scaled to max |R| = 1.
RewardRegulator fit_ml_irl(const HighLevelMDP& mdp, std::span<const HighLevelDemo> demos, const IRLConfig& config = {});

std::vector<double> step_rewards(const RewardRegulator& regulator, const HighLevelDemo& demo);

}  // namespace evolal
