#include "evolal/baselines.hpp"

#include "evolal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace evolal {

FitResult train_bc(std::span<const Sample> samples, int action_count, const TrainConfig& config, DataLoss loss) {
  return fit_supervised(samples, action_count, config, loss);
}

void GPConfig::validate() const {
  if (!(length_scale > 0.0) || !(signal_variance > 0.0)) throw ConfigError("kernel parameters must be positive");
  if (!(noise_variance > 0.0)) throw ConfigError("observation noise must be positive");
}

double normalized_learning_gain(double pre, double post) {
  if (pre >= 100.0) return 0.0;
  return std::clamp((post - pre) / (100.0 - pre), -1.0, 1.0);
}

Matrix se_kernel(const Matrix& a, const Matrix& b, const GPConfig& cfg) {
  if (a.cols() != b.cols()) throw ShapeError("kernel inputs differ in dimension");
  Matrix k(a.rows(), b.rows());
  const double inv = 1.0 / (2.0 * cfg.length_scale * cfg.length_scale);
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) k(i, j) = cfg.signal_variance * std::exp(-(a.row(i) - b.row(j)).squaredNorm() * inv);
  return k;
}

Vector gp_posterior_from_kernel(const Matrix& kss, std::span<const int> owner, const Vector& y, double noise) {
  const auto T = kss.rows();
  if (kss.cols() != T || static_cast<Eigen::Index>(owner.size()) != T) throw ShapeError("kernel and owners disagree");
  const auto J = y.size();
  Matrix a = Matrix::Zero(J, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int j = owner[static_cast<std::size_t>(t)];
    if (j < 0 || j >= J) throw IndexError("step owner out of range");
    a(j, t) = 1.0;
  }
  const Matrix ka = kss * a.transpose();  // T x J: cov(f_t, y_j)
  Matrix g = a * ka;
  g.diagonal().array() += noise;
  g = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || lo / hi < 1e-14)
    throw ConditioningError("return Gram matrix is numerically singular; increase the observation noise");
  return ka * g.ldlt().solve(y);
}

std::vector<std::vector<double>> gp_redistribute(std::span<const Trajectory> trajs, std::span<const double> returns,
                                                 const GPConfig& cfg) {
  cfg.validate();
  if (trajs.size() != returns.size()) throw ShapeError("one return per trajectory is required");
  if (trajs.empty()) return {};
  std::vector<int> owner;
  std::vector<const Vector*> states;
  for (std::size_t j = 0; j < trajs.size(); ++j)
    for (const auto& s : trajs[j].steps) {
      owner.push_back(static_cast<int>(j));
      states.push_back(&s.state);
    }
  Matrix x(static_cast<Eigen::Index>(states.size()), states.front()->size());
  for (std::size_t i = 0; i < states.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = states[i]->transpose();
  const Vector y = Eigen::Map<const Vector>(returns.data(), static_cast<Eigen::Index>(returns.size()));
  const Vector f = gp_posterior_from_kernel(se_kernel(x, x, cfg), owner, y, cfg.noise_variance);
  std::vector<std::vector<double>> out(trajs.size());
  for (std::size_t i = 0; i < owner.size(); ++i) out[static_cast<std::size_t>(owner[i])].push_back(f[static_cast<Eigen::Index>(i)]);
  return out;
}

void DQNConfig::validate() const {
  train.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("discount must lie in [0, 1)");
  if (target_sync < 1) throw ConfigError("target sync interval must be positive");
}

DQNResult train_dqn(std::span<const Trajectory> trajs, std::span<const std::vector<double>> rewards, int action_count,
                    const DQNConfig& cfg) {
  cfg.validate();
  if (trajs.size() != rewards.size()) throw ShapeError("rewards must cover every trajectory");
  struct Transition {
    const Vector* s;
    int a;
    double r;
    const Vector* next;  // null at the end of a trajectory
  };
  std::vector<Transition> data;
  for (std::size_t j = 0; j < trajs.size(); ++j) {
    const auto& st = trajs[j].steps;
    if (rewards[j].size() != st.size()) throw ShapeError("one reward per step is required");
    for (std::size_t t = 0; t < st.size(); ++t)
      data.push_back({&st[t].state, st[t].action, rewards[j][t], t + 1 < st.size() ? &st[t + 1].state : nullptr});
  }
  if (data.empty()) throw DegenerateInputError("no transitions");
  const int dim = static_cast<int>(data.front().s->size());

  DQNResult out;
  out.q = PolicyNet::create(dim, action_count, cfg.train.hidden, derive_seed(cfg.train.seed, 1));
  PolicyNet target = out.q;
  Adam adam(out.q, cfg.train.learning_rate, cfg.train.weight_decay);
  std::mt19937_64 rng(derive_seed(cfg.train.seed, 2));
  std::vector<std::size_t> order(data.size());
  const std::size_t b = std::min<std::size_t>(data.size(), static_cast<std::size_t>(cfg.train.batch_size));
  int updates = 0;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < data.size(); start += b) {
      const std::size_t stop = std::min(data.size(), start + b);
      const auto n = static_cast<Eigen::Index>(stop - start);
      Matrix s(n, dim), next(n, dim);
      Vector y(n);
      std::vector<bool> terminal(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& tr = data[order[start + static_cast<std::size_t>(i)]];
        s.row(i) = tr.s->transpose();
        terminal[static_cast<std::size_t>(i)] = tr.next == nullptr;
        next.row(i) = tr.next ? tr.next->transpose() : tr.s->transpose();
        y[i] = tr.r;
      }
      const Matrix qnext = target.logits(next);
      for (Eigen::Index i = 0; i < n; ++i)
        if (!terminal[static_cast<std::size_t>(i)]) y[i] += cfg.gamma * qnext.row(i).maxCoeff();
      const auto pass = forward(out.q, s);
      const Matrix& q = pass.acts.back();
      Matrix dq = Matrix::Zero(n, action_count);
      double loss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = data[order[start + static_cast<std::size_t>(i)]].a;
        const double e = q(i, a) - y[i];
        loss += e * e / static_cast<double>(n);
        dq(i, a) = 2.0 * e / static_cast<double>(n);
      }
      Gradients g = Gradients::zeros_like(out.q);
      backward(out.q, pass, dq, &g);
      adam.step(out.q, g);
      out.loss_trace.push_back(loss);
      if (++updates % cfg.target_sync == 0) target = out.q;
    }
  }
  return out;
}

Vector dqn_probs(const PolicyNet& q, const Vector& state) { return softmax(q.logits(state)); }

}  // namespace evolal
