#include "evolal/partition.hpp"

#include "evolal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace evolal {

void PartitionConfig::validate() const {
  if (clusters < 1) throw ConfigError("cluster count must be at least 1");
  if (window < 1) throw ConfigError("window size must be at least 1");
  if (!(sparsity >= 0.0)) throw ConfigError("sparsity coefficient must be nonnegative");
  if (!(consistency >= 0.0)) throw ConfigError("consistency coefficient must be nonnegative");
  if (decay_tau && !(*decay_tau > 0.0)) throw ConfigError("decay time constant must be positive");
  if (!(reward_strength >= 0.0)) throw ConfigError("reward-regulation strength must be nonnegative");
  if (max_sweeps < 1) throw ConfigError("max sweeps must be at least 1");
  if (!(admm_tol > 0.0)) throw ConfigError("ADMM tolerance must be positive");
  if (kmeans_iterations < 0) throw ConfigError("k-means iterations must be nonnegative");
}

std::vector<std::vector<int>> PartitionModel::step_labels() const {
  // Window count n - w + 1 determines the step count.
  std::vector<std::vector<int>> out;
  out.reserve(window_labels.size());
  for (const auto& wl : window_labels)
    out.push_back(window_labels_to_steps(wl, static_cast<int>(wl.size()) + config.window - 1, config.window));
  return out;
}

GaussianScorer::GaussianScorer(const ClusterProfile& p) : mean_(p.mean) {
  const auto d = p.mean.size();
  if (p.precision.rows() != d || p.precision.cols() != d) throw ShapeError("profile mean and precision disagree");
  Eigen::LLT<Matrix> llt(p.precision);
  if (llt.info() != Eigen::Success) throw ModelStateError("precision matrix is not positive definite");
  lower_ = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(lower_(i, i));
  constant_ = 0.5 * logdet - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
}

double GaussianScorer::loglik(const Vector& x) const {
  if (x.size() != mean_.size()) throw ShapeError("window dimension does not match profile");
  const Vector y = lower_.transpose() * (x - mean_);
  return -0.5 * y.squaredNorm() + constant_;
}

double window_loglik(const Vector& x, const ClusterProfile& profile) { return GaussianScorer(profile).loglik(x); }

Matrix window_logliks(std::span<const Window> windows, std::span<const ClusterProfile> profiles) {
  std::vector<GaussianScorer> scorers;
  scorers.reserve(profiles.size());
  for (const auto& p : profiles) scorers.emplace_back(p);
  Matrix ll(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(profiles.size()));
  for (std::size_t t = 0; t < windows.size(); ++t)
    for (std::size_t q = 0; q < scorers.size(); ++q)
      ll(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(q)) = scorers[q].loglik(windows[t].stacked);
  return ll;
}

std::vector<double> switch_penalties(std::span<const Window> windows, double beta, double tau,
                                     std::span<const double> reward_gaps, double alpha) {
  if (!(tau > 0.0)) throw ParameterError("decay time constant must be positive");
  if (!reward_gaps.empty() && reward_gaps.size() != windows.size())
    throw ShapeError("reward gaps must align with windows");
  std::vector<double> pen(windows.size(), 0.0);
  for (std::size_t t = 1; t < windows.size(); ++t) {
    double b = beta * std::exp(-std::max(0.0, windows[t].time_gap) / tau);
    if (!reward_gaps.empty() && alpha != 0.0) b *= std::exp(-alpha * std::abs(reward_gaps[t]));
    pen[t] = b;
  }
  return pen;
}

std::vector<double> window_reward_gaps(std::span<const Window> windows, std::span<const double> rewards) {
  std::vector<double> gaps(windows.size(), 0.0);
  for (std::size_t t = 0; t < windows.size(); ++t) {
    const int end = windows[t].end_index;
    if (end < 0 || static_cast<std::size_t>(end) >= rewards.size()) throw ShapeError("step rewards shorter than trajectory");
    if (end > 0) gaps[t] = rewards[static_cast<std::size_t>(end)] - rewards[static_cast<std::size_t>(end - 1)];
  }
  return gaps;
}

std::vector<int> assign_labels(const Matrix& ll, std::span<const double> pen) {
  const auto T = ll.rows();
  const auto Q = ll.cols();
  if (T == 0) throw LengthError("cannot label an empty window sequence");
  if (Q == 0) throw ShapeError("no cluster profiles");
  if (static_cast<Eigen::Index>(pen.size()) != T) throw ShapeError("penalties must align with windows");

  Matrix cost(T, Q);
  Eigen::MatrixXi back(T, Q);
  for (Eigen::Index q = 0; q < Q; ++q) cost(0, q) = -ll(0, q);
  for (Eigen::Index t = 1; t < T; ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index q = 1; q < Q; ++q)
      if (cost(t - 1, q) < cost(t - 1, best)) best = q;
    const double switch_cost = cost(t - 1, best) + pen[static_cast<std::size_t>(t)];
    for (Eigen::Index q = 0; q < Q; ++q) {
      // Staying wins ties.
      if (cost(t - 1, q) <= switch_cost) {
        cost(t, q) = cost(t - 1, q) - ll(t, q);
        back(t, q) = static_cast<int>(q);
      } else {
        cost(t, q) = switch_cost - ll(t, q);
        back(t, q) = static_cast<int>(best);
      }
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(T));
  Eigen::Index last = 0;
  for (Eigen::Index q = 1; q < Q; ++q)
    if (cost(T - 1, q) < cost(T - 1, last)) last = q;
  labels[static_cast<std::size_t>(T - 1)] = static_cast<int>(last);
  for (Eigen::Index t = T - 1; t > 0; --t)
    labels[static_cast<std::size_t>(t - 1)] = back(t, labels[static_cast<std::size_t>(t)]);
  return labels;
}

std::vector<int> assign_labels(std::span<const Window> windows, std::span<const ClusterProfile> profiles,
                               std::span<const double> penalties) {
  if (windows.empty()) throw LengthError("cannot label an empty window sequence");
  return assign_labels(window_logliks(windows, profiles), penalties);
}

double labeling_cost(const Matrix& ll, std::span<const double> pen, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != ll.rows()) throw ShapeError("labels must align with windows");
  double c = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    c -= ll(static_cast<Eigen::Index>(t), labels[t]);
    if (t > 0 && labels[t] != labels[t - 1]) c += pen[t];
  }
  return c;
}

ClusterProfile fit_profile(const Matrix& samples, int block_size, double lambda, double admm_tol, bool toeplitz) {
  const auto n = samples.rows();
  if (n < 2) throw DegenerateInputError("a cluster profile needs at least two windows");
  ClusterProfile p;
  p.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - p.mean.transpose();
  Matrix s = centered.transpose() * centered / static_cast<double>(n);
  s.diagonal().array() += kCovarianceRidge;
  AdmmOptions opt;
  opt.lambda = lambda;
  opt.block_size = block_size;
  opt.toeplitz = toeplitz;
  opt.tol = admm_tol;
  p.precision = solve_toeplitz_glasso(s, opt).precision;
  return p;
}

double median_time_gap(const Dataset& data) {
  std::vector<double> gaps;
  for (const auto& t : data.trajectories)
    for (std::size_t i = 1; i < t.steps.size(); ++i) gaps.push_back(t.steps[i].time - t.steps[i - 1].time);
  if (gaps.empty()) return 1.0;
  const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  double med = *mid;
  if (gaps.size() % 2 == 0) {
    const double lower = *std::max_element(gaps.begin(), mid);
    med = 0.5 * (med + lower);
  }
  return med > 0.0 ? med : 1.0;
}

namespace {

struct TrajectoryWindows {
  std::vector<Window> windows;
  std::vector<double> penalties;
  Eigen::Index offset = 0;  // first row in the pooled window matrix
};

double sparsity_term(const std::vector<ClusterProfile>& profiles, double lambda) {
  double s = 0.0;
  for (const auto& p : profiles) s += p.precision.cwiseAbs().sum() - p.precision.diagonal().cwiseAbs().sum();
  return lambda * s;
}

// Seeded k-means++ followed by Lloyd iterations; returns pooled labels.
std::vector<int> kmeans_init(const Matrix& x, int k, int iterations, std::mt19937_64& rng) {
  const auto n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  auto assign = [&] {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) changed = true;
      labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return changed;
  };
  assign();
  for (int it = 0; it < iterations; ++it) {
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    if (!assign()) break;
  }
  return labels;
}

}  // namespace

PartitionModel fit_partition(const Dataset& data, const PartitionConfig& cfg,
                             std::span<const std::vector<double>> step_rewards) {
  cfg.validate();
  if (data.trajectories.empty()) throw LengthError("no trajectories to partition");
  if (!step_rewards.empty() && step_rewards.size() != data.trajectories.size())
    throw ShapeError("step rewards must cover every trajectory");

  PartitionModel model;
  model.config = cfg;
  model.state_dimension = data.trajectories.front().dimension();
  model.tau = cfg.decay_tau ? *cfg.decay_tau : median_time_gap(data);

  std::vector<TrajectoryWindows> tw;
  tw.reserve(data.trajectories.size());
  Eigen::Index total = 0;
  for (std::size_t j = 0; j < data.trajectories.size(); ++j) {
    const auto& traj = data.trajectories[j];
    TrajectoryWindows entry;
    entry.windows = window_trajectory(traj, cfg.window);
    std::vector<double> gaps;
    if (!step_rewards.empty()) gaps = window_reward_gaps(entry.windows, step_rewards[j]);
    entry.penalties = switch_penalties(entry.windows, cfg.consistency, model.tau, gaps, cfg.reward_strength);
    entry.offset = total;
    total += static_cast<Eigen::Index>(entry.windows.size());
    model.trajectory_ids.push_back(traj.id);
    tw.push_back(std::move(entry));
  }
  if (cfg.clusters > total) throw ConfigError("cluster count exceeds the number of windows");

  const int dim = model.state_dimension * cfg.window;
  Matrix pooled(total, dim);
  for (const auto& entry : tw)
    for (std::size_t t = 0; t < entry.windows.size(); ++t)
      pooled.row(entry.offset + static_cast<Eigen::Index>(t)) = entry.windows[t].stacked.transpose();

  std::mt19937_64 rng(derive_seed(cfg.seed, 0x9a27));
  std::vector<int> labels = kmeans_init(pooled, cfg.clusters, cfg.kmeans_iterations, rng);

  const int Q = cfg.clusters;
  std::vector<ClusterProfile> profiles;
  std::vector<ClusterProfile> prev_profiles;
  std::vector<double> fit_quality(static_cast<std::size_t>(total), 0.0);  // higher is better

  // Initial fit quality: negative squared distance to the k-means centroid.
  {
    Matrix centers = Matrix::Zero(Q, dim);
    std::vector<int> counts(static_cast<std::size_t>(Q), 0);
    for (Eigen::Index i = 0; i < total; ++i) {
      centers.row(labels[static_cast<std::size_t>(i)]) += pooled.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int q = 0; q < Q; ++q)
      if (counts[static_cast<std::size_t>(q)] > 0) centers.row(q) /= counts[static_cast<std::size_t>(q)];
    for (Eigen::Index i = 0; i < total; ++i)
      fit_quality[static_cast<std::size_t>(i)] = -(pooled.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }

  std::vector<int> accepted_labels;
  std::vector<ClusterProfile> accepted_profiles;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    model.sweeps = sweep;
    // Profile phase.
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(Q));
    for (Eigen::Index i = 0; i < total; ++i) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
    std::vector<Eigen::Index> worst(static_cast<std::size_t>(total));
    for (Eigen::Index i = 0; i < total; ++i) worst[static_cast<std::size_t>(i)] = i;
    std::stable_sort(worst.begin(), worst.end(), [&](Eigen::Index a, Eigen::Index b) {
      return fit_quality[static_cast<std::size_t>(a)] < fit_quality[static_cast<std::size_t>(b)];
    });
    const auto reseed_count = std::min<Eigen::Index>(total, std::max<Eigen::Index>(2, total / (2 * Q)));
    profiles.assign(static_cast<std::size_t>(Q), ClusterProfile{});
    for (int q = 0; q < Q; ++q) {
      auto& idx = members[static_cast<std::size_t>(q)];
      if (idx.size() < 2) idx.assign(worst.begin(), worst.begin() + reseed_count);
      Matrix samples(static_cast<Eigen::Index>(idx.size()), dim);
      for (std::size_t r = 0; r < idx.size(); ++r) samples.row(static_cast<Eigen::Index>(r)) = pooled.row(idx[r]);
      profiles[static_cast<std::size_t>(q)] = fit_profile(samples, model.state_dimension, cfg.sparsity, cfg.admm_tol);
    }

    // Label phase.
    std::vector<int> next(static_cast<std::size_t>(total));
    double objective = sparsity_term(profiles, cfg.sparsity);
    for (const auto& entry : tw) {
      const Matrix ll = window_logliks(entry.windows, profiles);
      const auto lab = assign_labels(ll, entry.penalties);
      objective += labeling_cost(ll, entry.penalties, lab);
      for (std::size_t t = 0; t < lab.size(); ++t) {
        const auto i = static_cast<std::size_t>(entry.offset) + t;
        next[i] = lab[t];
        fit_quality[i] = ll(static_cast<Eigen::Index>(t), lab[t]);
      }
    }

    if (!model.objective_trace.empty()) {
      const double prev = model.objective_trace.back();
      if (objective > prev + 1e-9 * std::max(1.0, std::abs(prev))) {
        // Sweep made things worse; keep the previous iterate.
        model.converged = true;
        break;
      }
    }
    model.objective_trace.push_back(objective);
    accepted_labels = next;
    accepted_profiles = profiles;
    if (next == labels) {
      model.converged = true;
      break;
    }
    labels = std::move(next);
  }

  model.profiles = std::move(accepted_profiles);
  model.objective = model.objective_trace.back();
  for (const auto& entry : tw)
    model.window_labels.emplace_back(accepted_labels.begin() + entry.offset,
                                     accepted_labels.begin() + entry.offset + static_cast<Eigen::Index>(entry.windows.size()));
  return model;
}

std::vector<int> label_windows(const PartitionModel& model, const Trajectory& trajectory,
                               std::span<const double> step_rewards) {
  if (model.profiles.empty()) throw ModelStateError("partition model is not fitted");
  const auto windows = window_trajectory(trajectory, model.config.window);
  std::vector<double> gaps;
  if (!step_rewards.empty()) gaps = window_reward_gaps(windows, step_rewards);
  const auto pen = switch_penalties(windows, model.config.consistency, model.tau, gaps, model.config.reward_strength);
  return assign_labels(windows, model.profiles, pen);
}

double assigned_loglik(const PartitionModel& model, const Dataset& data) {
  if (data.trajectories.size() != model.window_labels.size())
    throw ShapeError("dataset does not match the partition model's training data");
  std::vector<GaussianScorer> scorers;
  for (const auto& p : model.profiles) scorers.emplace_back(p);
  double ll = 0.0;
  for (std::size_t j = 0; j < data.trajectories.size(); ++j) {
    const auto windows = window_trajectory(data.trajectories[j], model.config.window);
    const auto& lab = model.window_labels[j];
    if (lab.size() != windows.size()) throw ShapeError("label count does not match window count");
    for (std::size_t t = 0; t < windows.size(); ++t) ll += scorers[static_cast<std::size_t>(lab[t])].loglik(windows[t].stacked);
  }
  return ll;
}

int bic_parameter_count(const PartitionModel& model) {
  int k = 0;
  for (const auto& p : model.profiles) {
    const auto d = p.precision.rows();
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index r = 0; r <= c; ++r)
        if (p.precision(r, c) != 0.0) ++k;
    k += static_cast<int>(p.mean.size());
  }
  return k;
}

double bic_score(const PartitionModel& model, const Dataset& data) {
  std::size_t windows = 0;
  for (const auto& lab : model.window_labels) windows += lab.size();
  return -2.0 * assigned_loglik(model, data) +
         static_cast<double>(bic_parameter_count(model)) * std::log(static_cast<double>(windows));
}

}  // namespace evolal
