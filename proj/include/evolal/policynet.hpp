#pragma once

#include "evolal/core.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace evolal {

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Rectifier MLP mapping a state (or stacked window) to action logits.
class PolicyNet {
 public:
  PolicyNet() = default;

  // He-normal weights, zero biases.
  static PolicyNet create(int input_dim, int action_count, const std::vector<int>& hidden, uint64_t seed);
  static PolicyNet zeros(int input_dim, int action_count, const std::vector<int>& hidden);

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int action_count() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
  std::vector<int> hidden_sizes() const;
  std::size_t parameter_count() const;

  Vector logits(const Vector& x) const;
  // One sample per row; returns N x A.
  Matrix logits(const Matrix& x) const;

  Vector flatten() const;
  void unflatten(const Vector& params);
  bool finite() const;

  std::vector<Layer> layers;
};

// Same structure as the network's parameters.
struct Gradients {
  std::vector<Layer> layers;

  static Gradients zeros_like(const PolicyNet& net);
  void add(const Gradients& other, double scale = 1.0);
  Vector flatten() const;
};

// Cached activations of a batch forward pass: acts[0] is the input,
// acts.back() the logits.
struct ForwardPass {
  std::vector<Matrix> acts;
};

ForwardPass forward(const PolicyNet& net, const Matrix& x);

/// Backpropagates dL/dlogits (N x A). Parameter gradients are accumulated
/// into `grads` when given; the input gradient is written to `dinput`.
void backward(const PolicyNet& net, const ForwardPass& pass, const Matrix& dlogits, Gradients* grads,
              Matrix* dinput = nullptr);

double logsumexp(const Vector& v);
Vector softmax(const Vector& v);
Matrix softmax_rows(const Matrix& logits);

Vector policy_probs(const PolicyNet& net, const Vector& x);
double state_energy(const PolicyNet& net, const Vector& x);
// dE/dx for a batch of states (one per row).
Matrix energy_input_gradient(const PolicyNet& net, const Matrix& x);

struct Sample {
  Vector state;
  int action = 0;
  double weight = 1.0;
};

Matrix stack_states(std::span<const Sample> samples);

enum class DataLoss {
  kCrossEntropy,  // -log pi(a|s)
  kSquared,       // ||pi(.|s) - onehot(a)||^2
};

/// sum_i w_i * loss_i with its parameter gradient (accumulated into `grads`).
double data_loss(const PolicyNet& net, std::span<const Sample> samples, DataLoss kind, Gradients* grads,
                 double scale = 1.0);

/// Energy contrast over positive (weighted) and negative states:
///   alpha * (wmean E(pos) - mean E(neg)) + reg * 0.5 * (wmean E(pos)^2 + mean E(neg)^2).
double energy_loss(const PolicyNet& net, const Matrix& positives, std::span<const double> weights,
                   const Matrix& negatives, double alpha, double reg, Gradients* grads);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 32;
  double weight_decay = 1e-5;
  uint64_t seed = 0;
  std::vector<int> hidden{64, 64};

  void validate() const;
};

// Adam with decoupled weight decay.
class Adam {
 public:
  Adam(const PolicyNet& net, double learning_rate, double weight_decay, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step(PolicyNet& net, const Gradients& grads);
  int steps() const { return t_; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  int t_ = 0;
  Vector m_, v_;
};

/// Extra per-minibatch loss; adds its gradient into `grads` and returns its value.
using BatchHook = std::function<double(const PolicyNet& net, std::span<const std::size_t> batch, Gradients& grads)>;

struct FitResult {
  PolicyNet net;
  std::vector<double> loss_trace;  // mean minibatch objective per epoch
};

/// Minibatch training of sum_i w_i loss_i (estimated as N/B times the batch
/// sum) plus an optional hook. Shuffling and initialization draw from streams
/// derived from `config.seed` only, so identical inputs give identical nets.
FitResult fit_supervised(std::span<const Sample> samples, int action_count, const TrainConfig& config,
                         DataLoss kind, const PolicyNet* warm_start = nullptr, int epochs = -1,
                         const BatchHook& hook = {});

/// Largest relative error between the analytic gradient and central finite
/// differences (step h) over `probes` randomly chosen parameters.
/// `loss` evaluates the objective and, when `grads` is nonnull, its gradient.
using LossFn = std::function<double(const PolicyNet& net, Gradients* grads)>;
double grad_check(const PolicyNet& net, const LossFn& loss, int probes = 64, double h = 1e-5, uint64_t seed = 0);

}  // namespace evolal
