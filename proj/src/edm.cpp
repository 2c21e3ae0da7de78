#include "evolal/edm.hpp"

#include "evolal/error.hpp"

#include <cmath>
#include <random>

namespace evolal {

void EDMConfig::validate() const {
  train.validate();
  if (!(energy_weight >= 0.0)) throw ConfigError("energy weight must be nonnegative");
  if (langevin_steps < 0) throw ConfigError("Langevin steps must be nonnegative");
  if (!(langevin_step > 0.0) || !(langevin_noise > 0.0)) throw ConfigError("Langevin step and noise must be positive");
  if (buffer_size < 1) throw ConfigError("negative buffer size must be positive");
  if (!(reinit_prob >= 0.0 && reinit_prob <= 1.0)) throw ConfigError("reinitialization probability must lie in [0, 1]");
  if (!(energy_reg >= 0.0)) throw ConfigError("energy regularizer must be nonnegative");
}

Matrix langevin(const std::function<Matrix(const Matrix&)>& grad, Matrix x, int steps, double step, double noise,
                uint64_t seed) {
  if (steps < 0) throw ParameterError("Langevin steps must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> xi(0.0, 1.0);
  for (int k = 0; k < steps; ++k) {
    if (step != 0.0) x -= step * grad(x);
    if (noise != 0.0)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) += noise * xi(rng);
  }
  return x;
}

Matrix sgld_negatives(const PolicyNet& net, const Matrix& init, int steps, double step, double noise, uint64_t seed) {
  return langevin([&](const Matrix& x) { return energy_input_gradient(net, x); }, init, steps, step, noise, seed);
}

double edm_loss(const PolicyNet& net, std::span<const Sample> samples, const Matrix& negatives, const EDMConfig& cfg,
                Gradients* grads) {
  double loss = data_loss(net, samples, DataLoss::kCrossEntropy, grads);
  // The regularizer belongs to the energy head and vanishes with it.
  if (cfg.energy_weight == 0.0) return loss;
  std::vector<double> w;
  w.reserve(samples.size());
  for (const auto& s : samples) w.push_back(s.weight);
  return loss + energy_loss(net, stack_states(samples), w, negatives, cfg.energy_weight, cfg.energy_reg, grads);
}

EDMResult train_edm(std::span<const Sample> samples, int action_count, const EDMConfig& cfg,
                    const PolicyNet* warm_start, int epochs) {
  cfg.validate();
  if (samples.empty()) throw DegenerateInputError("no training samples");
  if (cfg.energy_weight == 0.0) {
    auto fit = fit_supervised(samples, action_count, cfg.train, DataLoss::kCrossEntropy, warm_start, epochs);
    return EDMResult{std::move(fit.net), std::move(fit.loss_trace)};
  }

  const Matrix states = stack_states(samples);
  const Vector lo = states.colwise().minCoeff().transpose();
  const Vector hi = states.colwise().maxCoeff().transpose();
  const auto dim = states.cols();
  std::mt19937_64 rng(derive_seed(cfg.train.seed, 3));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_row = [&](Matrix& m, Eigen::Index r) {
    for (Eigen::Index j = 0; j < dim; ++j) m(r, j) = lo[j] + (hi[j] - lo[j]) * unit(rng);
  };
  Matrix buffer(cfg.buffer_size, dim);
  for (Eigen::Index r = 0; r < buffer.rows(); ++r) uniform_row(buffer, r);

  std::uniform_int_distribution<Eigen::Index> slot(0, buffer.rows() - 1);
  BatchHook hook = [&](const PolicyNet& net, std::span<const std::size_t> batch, Gradients& g) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    std::vector<Eigen::Index> slots(static_cast<std::size_t>(b));
    Matrix init(b, dim);
    for (Eigen::Index i = 0; i < b; ++i) {
      slots[static_cast<std::size_t>(i)] = slot(rng);
      if (unit(rng) < cfg.reinit_prob) uniform_row(buffer, slots[static_cast<std::size_t>(i)]);
      init.row(i) = buffer.row(slots[static_cast<std::size_t>(i)]);
    }
    const Matrix neg = sgld_negatives(net, init, cfg.langevin_steps, cfg.langevin_step, cfg.langevin_noise, rng());
    for (Eigen::Index i = 0; i < b; ++i) buffer.row(slots[static_cast<std::size_t>(i)]) = neg.row(i);
    Matrix pos(b, dim);
    std::vector<double> w(static_cast<std::size_t>(b));
    for (Eigen::Index i = 0; i < b; ++i) {
      const auto& s = samples[batch[static_cast<std::size_t>(i)]];
      pos.row(i) = s.state.transpose();
      w[static_cast<std::size_t>(i)] = s.weight;
    }
    return energy_loss(net, pos, w, neg, cfg.energy_weight, cfg.energy_reg, &g);
  };
  auto fit = fit_supervised(samples, action_count, cfg.train, DataLoss::kCrossEntropy, warm_start, epochs, hook);
  return EDMResult{std::move(fit.net), std::move(fit.loss_trace)};
}

int argmax_lowest(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

Prediction predict(const PolicyNet& net, const Vector& state) {
  Prediction p;
  p.probs = policy_probs(net, state);
  p.action = argmax_lowest(p.probs);
  return p;
}

}  // namespace evolal
