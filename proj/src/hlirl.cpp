#include "evolal/hlirl.hpp"

#include "evolal/error.hpp"
#include "evolal/policynet.hpp"

#include <algorithm>
#include <cmath>

namespace evolal {

void HighLevelMDP::validate() const {
  if (states < 1 || actions < 1) throw ParameterError("MDP needs at least one state and one action");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("discount must lie in [0, 1)");
  if (transitions.rows() != states * actions || transitions.cols() != states)
    throw ShapeError("transition matrix has the wrong shape");
}

HighLevelMDP build_high_level_mdp(std::span<const HighLevelDemo> demos, int states, int actions, double gamma) {
  HighLevelMDP mdp{states, actions, gamma, Matrix::Zero(states * actions, states)};
  mdp.validate();
  auto check = [&](const HighLevelStep& s) {
    if (s.state < 0 || s.state >= states || s.action < 0 || s.action >= actions)
      throw IndexError("high-level label out of range");
  };
  for (const auto& d : demos)
    for (std::size_t t = 0; t < d.size(); ++t) {
      check(d[t]);
      if (t + 1 < d.size()) mdp.transitions(mdp.row(d[t].state, d[t].action), d[t + 1].state) += 1.0;
    }
  for (Eigen::Index r = 0; r < mdp.transitions.rows(); ++r) {
    const double total = mdp.transitions.row(r).sum();
    mdp.transitions.row(r) = (mdp.transitions.row(r).array() + 1.0) / (total + states);
  }
  return mdp;
}

namespace {

Matrix backup(const HighLevelMDP& mdp, const Matrix& reward, const Matrix& q) {
  const Vector v = q.rowwise().maxCoeff();
  const Vector next = mdp.transitions * v;
  Matrix out(mdp.states, mdp.actions);
  for (int s = 0; s < mdp.states; ++s)
    for (int a = 0; a < mdp.actions; ++a) out(s, a) = reward(s, a) + mdp.gamma * next[mdp.row(s, a)];
  return out;
}

}  // namespace

ValueIterationResult value_iteration(const HighLevelMDP& mdp, const Matrix& reward, double tol, int max_iter) {
  mdp.validate();
  if (reward.rows() != mdp.states || reward.cols() != mdp.actions) throw ShapeError("reward table has the wrong shape");
  if (!(tol > 0.0)) throw ParameterError("value-iteration tolerance must be positive");
  ValueIterationResult res;
  res.q = Matrix::Zero(mdp.states, mdp.actions);
  for (int it = 1; it <= max_iter; ++it) {
    Matrix next = backup(mdp, reward, res.q);
    const double r = (next - res.q).cwiseAbs().maxCoeff();
    res.q = std::move(next);
    res.residuals.push_back(r);
    res.iterations = it;
    if (r < tol) return res;
  }
  throw ConvergenceError("value iteration hit its iteration cap", res.residuals.back(), 0.0);
}

double bellman_residual(const HighLevelMDP& mdp, const Matrix& reward, const Matrix& q) {
  return (backup(mdp, reward, q) - q).cwiseAbs().maxCoeff();
}

Matrix boltzmann_policy(const Matrix& q, double beta) {
  return softmax_rows(beta * q);
}

std::vector<int> greedy_policy(const Matrix& q) {
  std::vector<int> pi(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    int best = 0;
    for (Eigen::Index a = 1; a < q.cols(); ++a)
      if (q(s, a) > q(s, best)) best = static_cast<int>(a);
    pi[static_cast<std::size_t>(s)] = best;
  }
  return pi;
}

void IRLConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("Boltzmann inverse temperature must be positive");
  if (steps < 0) throw ConfigError("IRL steps must be nonnegative");
  if (!(learning_rate > 0.0) || !(fd_step > 0.0) || !(inner_tol > 0.0)) throw ConfigError("IRL step sizes must be positive");
}

double demo_log_likelihood(const HighLevelMDP& mdp, const Matrix& reward, std::span<const HighLevelDemo> demos,
                           double beta, double tol) {
  const Matrix q = value_iteration(mdp, reward, tol).q;
  Matrix logpi(q.rows(), q.cols());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const Vector z = beta * q.row(s).transpose();
    logpi.row(s) = (z.array() - logsumexp(z)).transpose();
  }
  double ll = 0.0;
  for (const auto& d : demos)
    for (const auto& st : d) {
      if (st.state < 0 || st.state >= mdp.states || st.action < 0 || st.action >= mdp.actions)
        throw IndexError("high-level label out of range");
      ll += logpi(st.state, st.action);
    }
  return ll;
}

RewardRegulator fit_ml_irl(const HighLevelMDP& mdp, std::span<const HighLevelDemo> demos, const IRLConfig& cfg) {
  cfg.validate();
  mdp.validate();
  std::size_t observed = 0;
  for (const auto& d : demos) observed += d.size();
  if (observed == 0) throw DegenerateInputError("no high-level state-action pairs observed");

  auto L = [&](const Matrix& r) { return demo_log_likelihood(mdp, r, demos, cfg.beta, cfg.inner_tol); };
  RewardRegulator reg;
  reg.beta = cfg.beta;
  Matrix r = Matrix::Zero(mdp.states, mdp.actions);
  double cur = L(r);
  reg.likelihood_trace.push_back(cur);
  for (int step = 0; step < cfg.steps; ++step) {
    Matrix g(mdp.states, mdp.actions);
    for (int s = 0; s < mdp.states; ++s)
      for (int a = 0; a < mdp.actions; ++a) {
        Matrix up = r, down = r;
        up(s, a) += cfg.fd_step;
        down(s, a) -= cfg.fd_step;
        g(s, a) = (L(up) - L(down)) / (2.0 * cfg.fd_step);
      }
    if (g.cwiseAbs().maxCoeff() == 0.0) break;
    double lr = cfg.learning_rate;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h, lr *= 0.5) {
      Matrix cand = r + lr * g;
      const double val = L(cand);
      if (val >= cur) {
        accepted = val > cur || (cand - r).cwiseAbs().maxCoeff() > 0.0;
        r = std::move(cand);
        cur = val;
        break;
      }
    }
    if (!accepted) break;
    reg.likelihood_trace.push_back(cur);
  }
  const double scale = r.cwiseAbs().maxCoeff();
  reg.reward = scale > 0.0 ? Matrix(r / scale) : r;
  reg.log_likelihood = cur;
  return reg;
}

std::vector<double> step_rewards(const RewardRegulator& reg, const HighLevelDemo& demo) {
  std::vector<double> out;
  out.reserve(demo.size());
  for (const auto& st : demo) {
    if (st.state < 0 || st.state >= reg.reward.rows() || st.action < 0 || st.action >= reg.reward.cols())
      throw IndexError("high-level label out of range for the reward table");
    out.push_back(reg.reward(st.state, st.action));
  }
  return out;
}

}  // namespace evolal
