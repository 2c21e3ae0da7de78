#pragma once

#include "evolal/edm.hpp"

#include <span>
#include <string>
#include <vector>

namespace evolal {

// A trajectory or sub-trajectory; sample weights are ignored here.
struct Demonstration {
  std::string id;
  std::vector<Sample> steps;
};

struct EMConfig {
  int clusters = 3;
  double tol = 1e-3;      // relative change of the clustering log-likelihood
  int max_iter = 30;
  int mstep_epochs = 20;  // epochs per warm-started M-step after the first
  EDMConfig edm;
  uint64_t seed = 0;

  void validate() const;
};

enum class Termination { kConverged, kEmptyCluster, kMaxIter };
std::string termination_name(Termination t);

struct MixtureModel {
  int action_count = kDefaultActionCount;
  std::vector<double> priors;
  std::vector<PolicyNet> policies;
  Matrix responsibilities;              // demos x clusters, from the last E-step
  double log_likelihood = 0.0;
  std::vector<double> likelihood_trace;  // initial E-step, then one per iteration
  int iterations = 0;
  Termination reason = Termination::kMaxIter;

  int clusters() const { return static_cast<int>(policies.size()); }
  std::vector<int> hard_assignments() const;
};

// Per-step log-probabilities are floored here before summing.
inline constexpr double kLogProbFloor = -30.0;

double step_logprob(const PolicyNet& policy, const Sample& step);
double demo_loglik(const PolicyNet& policy, const Demonstration& demo);
// demos x clusters table of demo_loglik.
Matrix demo_logliks(std::span<const PolicyNet> policies, std::span<const Demonstration> demos);

// Rows proportional to prior_o * exp(loglik_jo), normalized in log space.
Matrix responsibilities(const Matrix& logliks, std::span<const double> priors);
double mixture_loglik(const Matrix& logliks, std::span<const double> priors);
Matrix e_step(const MixtureModel& model, std::span<const Demonstration> demos);

/// Generalized EM: a cluster's M-step update is kept only if it does not
/// lower that cluster's responsibility-weighted log-likelihood, so the
/// clustering log-likelihood never decreases. Clusters start from a
/// seed-and-grow pass that trains each new seed policy on the demo worst
/// explained by the current ones (sampled with probability proportional to
/// squared per-step loss).
MixtureModel fit_mixture(std::span<const Demonstration> demos, int action_count, const EMConfig& config);

// The O = 1 model: one EDM policy trained on every step with unit weight.
MixtureModel single_policy_mixture(std::span<const Demonstration> demos, int action_count, const EMConfig& config);

/// Posterior over clusters given steps [0, t) of `demo` (the prior when t = 0).
Vector cluster_posterior(const MixtureModel& model, const Demonstration& demo, int t);

// Mixture action probabilities at step t (0-based) under the causal posterior.
Vector predict_stepwise(const MixtureModel& model, const Demonstration& demo, int t);

}  // namespace evolal
