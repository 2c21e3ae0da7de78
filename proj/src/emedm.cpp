#include "evolal/emedm.hpp"

#include "evolal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace evolal {

void EMConfig::validate() const {
  if (clusters < 1) throw ConfigError("EM needs at least one cluster");
  if (!(tol > 0.0)) throw ConfigError("EM tolerance must be positive");
  if (max_iter < 1) throw ConfigError("EM iteration cap must be positive");
  if (mstep_epochs < 1) throw ConfigError("M-step epochs must be positive");
  edm.validate();
}

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::kConverged:
      return "converged";
    case Termination::kEmptyCluster:
      return "empty-cluster";
    case Termination::kMaxIter:
      return "max-iter";
  }
  return "unknown";
}

std::vector<int> MixtureModel::hard_assignments() const {
  std::vector<int> out(static_cast<std::size_t>(responsibilities.rows()));
  for (Eigen::Index j = 0; j < responsibilities.rows(); ++j)
    out[static_cast<std::size_t>(j)] = argmax_lowest(responsibilities.row(j).transpose());
  return out;
}

double step_logprob(const PolicyNet& policy, const Sample& step) {
  const Vector z = policy.logits(step.state);
  if (step.action < 0 || step.action >= z.size()) throw IndexError("action outside the policy's range");
  return std::max(kLogProbFloor, z[step.action] - logsumexp(z));
}

double demo_loglik(const PolicyNet& policy, const Demonstration& demo) {
  if (demo.steps.empty()) throw LengthError("demonstration '" + demo.id + "' is empty");
  const Matrix z = policy.logits(stack_states(demo.steps));
  double ll = 0.0;
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    const int a = demo.steps[static_cast<std::size_t>(t)].action;
    if (a < 0 || a >= z.cols()) throw IndexError("action outside the policy's range");
    ll += std::max(kLogProbFloor, z(t, a) - logsumexp(z.row(t).transpose()));
  }
  return ll;
}

Matrix demo_logliks(std::span<const PolicyNet> policies, std::span<const Demonstration> demos) {
  Matrix ll(static_cast<Eigen::Index>(demos.size()), static_cast<Eigen::Index>(policies.size()));
  for (std::size_t j = 0; j < demos.size(); ++j)
    for (std::size_t o = 0; o < policies.size(); ++o)
      ll(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(o)) = demo_loglik(policies[o], demos[j]);
  return ll;
}

Matrix responsibilities(const Matrix& ll, std::span<const double> priors) {
  if (static_cast<Eigen::Index>(priors.size()) != ll.cols()) throw ShapeError("priors must match cluster count");
  Matrix z(ll.rows(), ll.cols());
  for (Eigen::Index j = 0; j < ll.rows(); ++j) {
    Vector a(ll.cols());
    for (Eigen::Index o = 0; o < ll.cols(); ++o)
      a[o] = priors[static_cast<std::size_t>(o)] > 0.0 ? std::log(priors[static_cast<std::size_t>(o)]) + ll(j, o)
                                                      : -std::numeric_limits<double>::infinity();
    z.row(j) = softmax(a).transpose();
  }
  return z;
}

double mixture_loglik(const Matrix& ll, std::span<const double> priors) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < ll.rows(); ++j) {
    Vector a(ll.cols());
    for (Eigen::Index o = 0; o < ll.cols(); ++o)
      a[o] = priors[static_cast<std::size_t>(o)] > 0.0 ? std::log(priors[static_cast<std::size_t>(o)]) + ll(j, o)
                                                      : -std::numeric_limits<double>::infinity();
    total += logsumexp(a);
  }
  return total;
}

Matrix e_step(const MixtureModel& model, std::span<const Demonstration> demos) {
  return responsibilities(demo_logliks(model.policies, demos), model.priors);
}

namespace {

std::vector<Sample> weighted_samples(std::span<const Demonstration> demos, const Matrix* z, int o) {
  std::vector<Sample> out;
  for (std::size_t j = 0; j < demos.size(); ++j)
    for (const auto& s : demos[j].steps)
      out.push_back(Sample{s.state, s.action, z ? (*z)(static_cast<Eigen::Index>(j), o) : 1.0});
  return out;
}

EDMConfig with_seed(const EDMConfig& base, uint64_t seed) {
  EDMConfig c = base;
  c.train.seed = seed;
  return c;
}

void check_demos(std::span<const Demonstration> demos, int clusters) {
  if (demos.empty()) throw DegenerateInputError("no demonstrations");
  if (clusters > static_cast<int>(demos.size())) throw ConfigError("more clusters than demonstrations");
  for (const auto& d : demos)
    if (d.steps.empty()) throw LengthError("demonstration '" + d.id + "' is empty");
}

}  // namespace

MixtureModel single_policy_mixture(std::span<const Demonstration> demos, int action_count, const EMConfig& cfg) {
  cfg.validate();
  check_demos(demos, 1);
  MixtureModel m;
  m.action_count = action_count;
  const auto samples = weighted_samples(demos, nullptr, 0);
  m.policies.push_back(train_edm(samples, action_count, with_seed(cfg.edm, cfg.seed)).net);
  m.priors = {1.0};
  const Matrix ll = demo_logliks(m.policies, demos);
  m.responsibilities = Matrix::Ones(ll.rows(), 1);
  m.log_likelihood = mixture_loglik(ll, m.priors);
  m.likelihood_trace = {m.log_likelihood};
  m.iterations = 1;
  m.reason = Termination::kConverged;
  return m;
}

MixtureModel fit_mixture(std::span<const Demonstration> demos, int action_count, const EMConfig& cfg) {
  cfg.validate();
  check_demos(demos, cfg.clusters);
  if (cfg.clusters == 1) return single_policy_mixture(demos, action_count, cfg);
  const int O = cfg.clusters;
  const auto J = static_cast<Eigen::Index>(demos.size());

  // Seed-and-grow initialization.
  MixtureModel model;
  model.action_count = action_count;
  std::mt19937_64 rng(derive_seed(cfg.seed, 10));
  std::vector<bool> used(demos.size(), false);
  std::vector<double> per_step(demos.size(), std::numeric_limits<double>::infinity());
  for (int o = 0; o < O; ++o) {
    std::size_t pick = 0;
    if (o == 0) {
      pick = std::uniform_int_distribution<std::size_t>(0, demos.size() - 1)(rng);
    } else {
      std::vector<double> w(demos.size(), 0.0);
      for (std::size_t j = 0; j < demos.size(); ++j)
        if (!used[j]) w[j] = per_step[j] * per_step[j];
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      if (total > 0.0) {
        pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
      } else {
        while (used[pick]) ++pick;
      }
    }
    used[pick] = true;
    std::span<const Demonstration> one(&demos[pick], 1);
    const auto samples = weighted_samples(one, nullptr, 0);
    model.policies.push_back(
        train_edm(samples, action_count, with_seed(cfg.edm, derive_seed(cfg.seed, 11, static_cast<uint64_t>(o))), nullptr,
                  cfg.mstep_epochs)
            .net);
    for (std::size_t j = 0; j < demos.size(); ++j) {
      const double nll = -demo_loglik(model.policies.back(), demos[j]) / static_cast<double>(demos[j].steps.size());
      per_step[j] = std::min(per_step[j], nll);
    }
  }
  model.priors.assign(static_cast<std::size_t>(O), 1.0 / O);
  Matrix ll = demo_logliks(model.policies, demos);
  model.responsibilities = responsibilities(ll, model.priors);
  model.log_likelihood = mixture_loglik(ll, model.priors);
  model.likelihood_trace.push_back(model.log_likelihood);
  model.iterations = 0;
  model.reason = Termination::kMaxIter;

  auto has_empty = [&](const Matrix& z) {
    for (int o = 0; o < O; ++o)
      if (z.col(o).sum() < 1.0) return true;
    return false;
  };
  if (has_empty(model.responsibilities)) {
    model.reason = Termination::kEmptyCluster;
    return model;
  }

  for (int it = 1; it <= cfg.max_iter; ++it) {
    MixtureModel next = model;
    const Matrix& z = model.responsibilities;
    for (int o = 0; o < O; ++o) {
      const auto samples = weighted_samples(demos, &z, o);
      const uint64_t seed = it == 1 && o == 0 ? cfg.seed : derive_seed(cfg.seed, static_cast<uint64_t>(it), static_cast<uint64_t>(o));
      PolicyNet cand = it == 1 ? train_edm(samples, action_count, with_seed(cfg.edm, seed)).net
                               : train_edm(samples, action_count, with_seed(cfg.edm, seed), &model.policies[o],
                                           cfg.mstep_epochs)
                                     .net;
      double old_q = 0.0, new_q = 0.0;
      for (Eigen::Index j = 0; j < J; ++j) {
        old_q += z(j, o) * ll(j, o);
        new_q += z(j, o) * demo_loglik(cand, demos[static_cast<std::size_t>(j)]);
      }
      if (new_q >= old_q) next.policies[o] = std::move(cand);
    }
    for (int o = 0; o < O; ++o) next.priors[static_cast<std::size_t>(o)] = z.col(o).sum() / static_cast<double>(J);

    const Matrix next_ll = demo_logliks(next.policies, demos);
    next.responsibilities = responsibilities(next_ll, next.priors);
    next.log_likelihood = mixture_loglik(next_ll, next.priors);
    next.iterations = it;
    if (has_empty(next.responsibilities)) {
      model.reason = Termination::kEmptyCluster;
      return model;
    }
    next.likelihood_trace.push_back(next.log_likelihood);
    const double change = std::abs(next.log_likelihood - model.log_likelihood) /
                          std::max(1.0, std::abs(model.log_likelihood));
    const bool same = next.hard_assignments() == model.hard_assignments() &&
                      (next.responsibilities - model.responsibilities).cwiseAbs().maxCoeff() == 0.0;
    model = std::move(next);
    ll = next_ll;
    if (change < cfg.tol || same) {
      model.reason = Termination::kConverged;
      return model;
    }
  }
  model.reason = Termination::kMaxIter;
  return model;
}

Vector cluster_posterior(const MixtureModel& model, const Demonstration& demo, int t) {
  if (t < 0 || t > static_cast<int>(demo.steps.size())) throw IndexError("step index out of range");
  Vector a(model.clusters());
  for (int o = 0; o < model.clusters(); ++o) {
    const double p = model.priors[static_cast<std::size_t>(o)];
    a[o] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    for (int i = 0; i < t; ++i) a[o] += step_logprob(model.policies[static_cast<std::size_t>(o)], demo.steps[static_cast<std::size_t>(i)]);
  }
  return softmax(a);
}

Vector predict_stepwise(const MixtureModel& model, const Demonstration& demo, int t) {
  if (t < 0 || t >= static_cast<int>(demo.steps.size())) throw IndexError("step index out of range");
  const Vector post = cluster_posterior(model, demo, t);
  Vector probs = Vector::Zero(model.action_count);
  for (int o = 0; o < model.clusters(); ++o)
    probs += post[o] * policy_probs(model.policies[static_cast<std::size_t>(o)], demo.steps[static_cast<std::size_t>(t)].state);
  return probs;
}

}  // namespace evolal
