#include "evolal/themes.hpp"

#include "evolal/error.hpp"
#include "evolal/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace evolal {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kThemes:
      return "themes";
    case Variant::kThemes1:
      return "themes1";
    case Variant::kThemes0:
      return "themes0";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "themes") return Variant::kThemes;
  if (name == "themes1") return Variant::kThemes1;
  if (name == "themes0") return Variant::kThemes0;
  throw ConfigError("unknown variant '" + name + "'");
}

void ThemesConfig::validate() const {
  partition.validate();
  em.validate();
  irl.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("high-level discount must lie in [0, 1)");
  if (outer_iterations < 1) throw ConfigError("outer iteration cap must be positive");
  if (!(change_tol >= 0.0)) throw ConfigError("change tolerance must be nonnegative");
  if (min_run < 1) throw ConfigError("minimum run length must be positive");
}

std::vector<Sample> SubTrajectory::samples(const Trajectory& trajectory) const {
  if (start < 0 || end < start || end >= trajectory.length()) throw IndexError("sub-trajectory span out of range");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(length()));
  for (int i = start; i <= end; ++i)
    out.push_back(Sample{trajectory.steps[static_cast<std::size_t>(i)].state,
                         trajectory.steps[static_cast<std::size_t>(i)].action, 1.0});
  return out;
}

std::vector<SubTrajectory> cut_subtrajectories(const Trajectory& trajectory, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != trajectory.length()) throw LengthError("one label per step is required");
  std::vector<SubTrajectory> out;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    if (out.empty() || labels[static_cast<std::size_t>(i)] != out.back().label) {
      out.push_back(SubTrajectory{trajectory.id, i, i, labels[static_cast<std::size_t>(i)]});
    } else {
      out.back().end = i;
    }
  }
  return out;
}

void merge_short_runs(std::vector<int>& labels, const Matrix& ll, int min_run) {
  if (ll.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("one log-likelihood row per step");
  struct Run {
    int start, end, label;
  };
  for (;;) {
    std::vector<Run> runs;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
      if (runs.empty() || labels[static_cast<std::size_t>(i)] != runs.back().label) {
        runs.push_back({i, i, labels[static_cast<std::size_t>(i)]});
      } else {
        runs.back().end = i;
      }
    }
    if (runs.size() < 2) return;
    auto shortest = runs.end();
    for (auto it = runs.begin(); it != runs.end(); ++it)
      if (it->end - it->start + 1 < min_run) {
        shortest = it;
        break;
      }
    if (shortest == runs.end()) return;
    auto score = [&](int label) {
      double s = 0.0;
      for (int i = shortest->start; i <= shortest->end; ++i) s += ll(i, label);
      return s;
    };
    int target;
    if (shortest == runs.begin()) {
      target = std::next(shortest)->label;
    } else if (std::next(shortest) == runs.end()) {
      target = std::prev(shortest)->label;
    } else {
      const int left = std::prev(shortest)->label, right = std::next(shortest)->label;
      target = score(right) > score(left) ? right : left;
    }
    for (int i = shortest->start; i <= shortest->end; ++i) labels[static_cast<std::size_t>(i)] = target;
  }
}

Matrix step_logliks(const PartitionModel& model, const Trajectory& trajectory) {
  const auto windows = window_trajectory(trajectory, model.config.window);
  const Matrix wl = window_logliks(windows, model.profiles);
  Matrix out(trajectory.length(), wl.cols());
  for (int t = 0; t < trajectory.length(); ++t) out.row(t) = wl.row(std::max(0, t - model.config.window + 1));
  return out;
}

void ThemesModel::check_consistency() const {
  const int Q = partition.clusters();
  const int O = mixture.clusters();
  if (Q < 1 || O < 1) throw ModelStateError("model has no clusters");
  if (static_cast<int>(mixture.priors.size()) != O) throw ModelStateError("mixture priors do not match its policies");
  if (mixture.responsibilities.rows() != static_cast<Eigen::Index>(segments.size()) ||
      mixture.responsibilities.cols() != O)
    throw ModelStateError("responsibilities do not match the sub-trajectories");
  if (regulator.reward.rows() != Q || regulator.reward.cols() != O)
    throw ModelStateError("regulator table does not match the cluster counts");
  for (const auto& s : segments)
    if (s.label < 0 || s.label >= Q) throw ModelStateError("sub-trajectory label references a missing cluster");
  for (const auto& wl : partition.window_labels)
    for (int l : wl)
      if (l < 0 || l >= Q) throw ModelStateError("window label references a missing cluster");
}

namespace {

struct Pass {
  PartitionModel partition;
  MixtureModel mixture;
  RewardRegulator regulator;
  std::vector<SubTrajectory> segments;
  std::vector<int> step_labels;  // concatenated over trajectories
  Matrix step_resp;              // steps x O
};

Pass run_pass(const Dataset& experts, const ThemesConfig& cfg, Variant variant, PartitionModel pm) {
  Pass p;
  std::vector<Demonstration> demos;
  std::vector<std::size_t> first_segment;
  for (std::size_t j = 0; j < experts.trajectories.size(); ++j) {
    const auto& traj = experts.trajectories[j];
    auto labels = window_labels_to_steps(pm.window_labels[j], traj.length(), pm.config.window);
    merge_short_runs(labels, step_logliks(pm, traj), cfg.min_run);
    p.step_labels.insert(p.step_labels.end(), labels.begin(), labels.end());
    first_segment.push_back(p.segments.size());
    for (auto& s : cut_subtrajectories(traj, labels)) {
      demos.push_back(Demonstration{traj.id + "#" + std::to_string(s.start), s.samples(traj)});
      p.segments.push_back(std::move(s));
    }
  }
  first_segment.push_back(p.segments.size());

  p.mixture = variant == Variant::kThemes0 ? single_policy_mixture(demos, experts.action_count, cfg.em)
                                           : fit_mixture(demos, experts.action_count, cfg.em);
  const auto abar = p.mixture.hard_assignments();
  std::vector<HighLevelDemo> hl;
  for (std::size_t j = 0; j + 1 < first_segment.size(); ++j) {
    HighLevelDemo d;
    for (std::size_t k = first_segment[j]; k < first_segment[j + 1]; ++k)
      d.push_back(HighLevelStep{p.segments[k].label, abar[k]});
    hl.push_back(std::move(d));
  }
  const auto mdp = build_high_level_mdp(hl, pm.clusters(), p.mixture.clusters(), cfg.gamma);
  p.regulator = fit_ml_irl(mdp, hl, cfg.irl);

  p.step_resp.resize(static_cast<Eigen::Index>(p.step_labels.size()), p.mixture.clusters());
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < p.segments.size(); ++k)
    for (int i = 0; i < p.segments[k].length(); ++i) p.step_resp.row(row++) = p.mixture.responsibilities.row(static_cast<Eigen::Index>(k));
  p.partition = std::move(pm);
  return p;
}

// Per-step rewards R(label, abar) of each step's sub-trajectory.
std::vector<std::vector<double>> regulator_rewards(const Dataset& experts, const Pass& p) {
  const auto abar = p.mixture.hard_assignments();
  std::vector<std::vector<double>> out(experts.trajectories.size());
  std::size_t k = 0;
  for (std::size_t j = 0; j < experts.trajectories.size(); ++j)
    for (; k < p.segments.size() && p.segments[k].owner == experts.trajectories[j].id &&
           static_cast<int>(out[j].size()) < experts.trajectories[j].length();
         ++k)
      out[j].insert(out[j].end(), static_cast<std::size_t>(p.segments[k].length()),
                    p.regulator.reward(p.segments[k].label, abar[k]));
  return out;
}

double responsibility_change(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) return 1.0;
  Matrix overlap = Matrix::Zero(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) overlap += a.row(i).transpose() * b.row(i);
  const auto match = hungarian_max(overlap);
  double tv = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double d = 0.0;
    std::vector<bool> hit(static_cast<std::size_t>(b.cols()), false);
    for (Eigen::Index o = 0; o < a.cols(); ++o) {
      const int m = match[static_cast<std::size_t>(o)];
      if (m >= 0) {
        d += std::abs(a(i, o) - b(i, m));
        hit[static_cast<std::size_t>(m)] = true;
      } else {
        d += a(i, o);
      }
    }
    for (Eigen::Index o = 0; o < b.cols(); ++o)
      if (!hit[static_cast<std::size_t>(o)]) d += b(i, o);
    tv += 0.5 * d;
  }
  return tv / static_cast<double>(a.rows());
}

}  // namespace

ThemesModel fit_themes(const Dataset& experts, const ThemesConfig& cfg, Variant variant) {
  cfg.validate();
  if (experts.trajectories.empty()) throw DegenerateInputError("no expert trajectories");
  ThemesModel model;
  model.variant = variant;
  model.config = cfg;

  PartitionModel pm = fit_partition(experts, cfg.partition);
  Pass prev;
  bool have_prev = false;
  for (int pass = 1; pass <= cfg.outer_iterations; ++pass) {
    Pass cur = run_pass(experts, cfg, variant, std::move(pm));
    IterationLog entry{cur.partition.objective, cur.mixture.log_likelihood, cur.regulator.log_likelihood, 1.0, 1.0};
    if (have_prev) {
      entry.label_change = 1.0 - matched_accuracy(prev.step_labels, cur.step_labels);
      entry.responsibility_change = responsibility_change(prev.step_resp, cur.step_resp);
    }
    model.log.push_back(entry);
    model.iterations = pass;
    const bool settled = have_prev && entry.label_change < cfg.change_tol && entry.responsibility_change < cfg.change_tol;
    prev = std::move(cur);
    have_prev = true;
    if (settled || variant != Variant::kThemes) {
      model.converged = true;
      break;
    }
    PartitionModel next = fit_partition(experts, cfg.partition, regulator_rewards(experts, prev));
    if (next.window_labels == prev.partition.window_labels) {
      // The next pass would repeat this one exactly.
      model.converged = true;
      break;
    }
    pm = std::move(next);
  }
  model.partition = std::move(prev.partition);
  model.mixture = std::move(prev.mixture);
  model.regulator = std::move(prev.regulator);
  model.segments = std::move(prev.segments);
  model.check_consistency();
  return model;
}

StepState themes_step_state(const ThemesModel& model, const Trajectory& traj, int t) {
  if (t < 0 || t >= traj.length()) throw IndexError("step index out of range");
  const auto& pm = model.partition;
  const int w = pm.config.window;
  StepState st;
  st.label = -1;  // no complete window yet
  st.run_start = 0;
  if (t + 1 >= w) {
    Trajectory prefix;
    prefix.id = traj.id;
    prefix.steps.assign(traj.steps.begin(), traj.steps.begin() + t + 1);
    const auto labels = window_labels_to_steps(label_windows(pm, prefix), t + 1, w);
    st.label = labels.back();
    st.run_start = t;
    while (st.run_start > 0 && labels[static_cast<std::size_t>(st.run_start - 1)] == st.label) --st.run_start;
  }
  Demonstration demo{traj.id, {}};
  for (int i = st.run_start; i <= t; ++i)
    demo.steps.push_back(Sample{traj.steps[static_cast<std::size_t>(i)].state, traj.steps[static_cast<std::size_t>(i)].action, 1.0});
  st.posterior = cluster_posterior(model.mixture, demo, t - st.run_start);
  return st;
}

Vector predict_themes(const ThemesModel& model, const Trajectory& traj, int t) {
  const StepState st = themes_step_state(model, traj, t);
  Vector probs = Vector::Zero(model.mixture.action_count);
  const Vector& s = traj.steps[static_cast<std::size_t>(t)].state;
  for (int o = 0; o < model.mixture.clusters(); ++o)
    probs += st.posterior[o] * policy_probs(model.mixture.policies[static_cast<std::size_t>(o)], s);
  return probs;
}

std::string labeled_state_csv(const ThemesModel& model, const Dataset& data) {
  std::ostringstream os;
  char buf[32];
  os << "id,step";
  for (int i = 0; i < data.dimension(); ++i) os << ",x" << i;
  os << ",label";
  for (int o = 0; o < model.mixture.clusters(); ++o) os << ",p" << o;
  os << '\n';
  for (const auto& traj : data.trajectories)
    for (int t = 0; t < traj.length(); ++t) {
      const StepState st = themes_step_state(model, traj, t);
      os << traj.id << ',' << t;
      for (double v : traj.steps[static_cast<std::size_t>(t)].state) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        os << ',' << buf;
      }
      os << ',' << st.label;
      for (double p : st.posterior) {
        std::snprintf(buf, sizeof buf, "%.6f", p);
        os << ',' << buf;
      }
      os << '\n';
    }
  return os.str();
}

}  // namespace evolal
