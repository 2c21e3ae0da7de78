#pragma once

#include "evolal/core.hpp"
#include "evolal/hlirl.hpp"
#include "evolal/ingest.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace evolal {

/// Regime emitter. Each step has a latent regime z_t (drives the state
/// distribution) and a latent intent c_t (with z_t, drives the action).
struct EmitterConfig {
  int students = 50;
  int steps = 20;
  int dimension = 10;
  int regimes = 3;
  int intents = 3;
  int action_count = 3;
  double separation = 3.0;  // pairwise regime-mean distance in noise standard deviations
  double ar_coefficient = 0.0;  // AR(1) correlation of the within-regime noise

  // Regime change rule: fixed indices when nonempty, else a Markov switch
  // with `regime_switch_prob` per step. A change always moves to a new regime.
  std::vector<int> regime_change_points;
  double regime_switch_prob = 0.1;

  // Intent may switch only at these indices, with this probability.
  std::vector<int> intent_change_points;
  double intent_switch_prob = 1.0;
  std::vector<double> intent_prior;  // empty: uniform

  /// action_table[c](z, a) = P(a | intent c, regime z). When empty, intent c
  /// in regime z prefers action (c + z) mod A with probability `action_fidelity`.
  std::vector<Matrix> action_table;
  double action_fidelity = 0.9;

  double time_step = 1.0;  // gaps drawn uniformly from [0.5, 1.5] * time_step
  std::vector<std::string> semesters{"S21", "S22", "S24", "F24"};
  uint64_t seed = 0;

  void validate() const;
};

struct EmitterTruth {
  std::vector<std::vector<int>> regimes;        // per step
  std::vector<std::vector<int>> intents;        // per step
  std::vector<std::vector<int>> change_points;  // regime change indices per trajectory
  std::vector<Vector> means;                    // regime means

  // Intent at the first step of each trajectory.
  std::vector<int> initial_intents() const;
};

struct EmitterData {
  std::vector<StudentRecord> records;
  EmitterTruth truth;

  Dataset dataset(int action_count = kDefaultActionCount) const;
};

EmitterData gen_emitter(const EmitterConfig& config);

std::string truth_json(const EmitterTruth& truth);
void write_truth(const std::filesystem::path& path, const EmitterTruth& truth);

struct GridworldConfig {
  int width = 5;
  int height = 5;
  std::vector<double> cell_reward;  // width * height; empty: +1 at the far corner, -0.04 elsewhere
  double beta = 5.0;
  double gamma = 0.9;
  int episodes = 50;
  int horizon = 20;
  uint64_t seed = 0;

  void validate() const;
};

struct GridworldData {
  HighLevelMDP mdp;  // actions: up, down, left, right; walls keep the agent in place
  Matrix reward;     // states x actions
  Matrix q;          // exact optimal Q-values
  std::vector<HighLevelDemo> demos;
};

GridworldData gen_gridworld(const GridworldConfig& config);

// Dirichlet(concentration) transition rows; rewards uniform on [-1, 1].
struct TabularProblem {
  HighLevelMDP mdp;
  Matrix reward;
};
TabularProblem random_tabular_mdp(int states, int actions, double gamma, uint64_t seed, double concentration = 1.0);

/// Episodes of Boltzmann(beta * Q*) behavior totalling `total_steps` steps,
/// starting from uniformly random states.
std::vector<HighLevelDemo> sample_boltzmann_demos(const HighLevelMDP& mdp, const Matrix& reward, double beta,
                                                  int total_steps, int episode_length, uint64_t seed);

}  // namespace evolal
