#pragma once

#include "evolal/policynet.hpp"

#include <functional>
#include <span>
#include <vector>

namespace evolal {

struct EDMConfig {
  double energy_weight = 1.0;  // alpha_E
  int langevin_steps = 20;
  double langevin_step = 0.01;
  double langevin_noise = 0.005;
  int buffer_size = 512;
  double reinit_prob = 0.05;
  double energy_reg = 1e-3;
  TrainConfig train;

  void validate() const;
};

/// K iterations of x <- x - step * grad(x) + noise * xi on every row of `init`.
Matrix langevin(const std::function<Matrix(const Matrix&)>& grad, Matrix init, int steps, double step,
                double noise, uint64_t seed);

// Langevin negatives under the energy E(x) = -logsumexp(logits(x)).
Matrix sgld_negatives(const PolicyNet& net, const Matrix& init, int steps, double step, double noise,
                      uint64_t seed);

/// Full EDM objective on explicit negatives:
///   sum_i w_i CE_i + alpha_E (wmean E(pos) - mean E(neg)) + reg/2 (wmean E(pos)^2 + mean E(neg)^2).
double edm_loss(const PolicyNet& net, std::span<const Sample> samples, const Matrix& negatives,
                const EDMConfig& config, Gradients* grads);

struct EDMResult {
  PolicyNet net;
  std::vector<double> loss_trace;
};

/// Trains with a persistent negative buffer initialized (and reinitialized
/// with probability `reinit_prob`) uniformly over the data bounding box.
/// With energy_weight 0 no sampling happens and the run coincides with
/// cross-entropy behavior cloning under the same seed.
EDMResult train_edm(std::span<const Sample> samples, int action_count, const EDMConfig& config,
                    const PolicyNet* warm_start = nullptr, int epochs = -1);

struct Prediction {
  int action = 0;
  Vector probs;
};

// First index of the maximum.
int argmax_lowest(const Vector& v);
Prediction predict(const PolicyNet& net, const Vector& state);

}  // namespace evolal
