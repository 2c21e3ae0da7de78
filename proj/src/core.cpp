#include "evolal/core.hpp"

#include "evolal/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace evolal {

std::string_view action_label(int id) {
  switch (id) {
    case 0:
      return "SOLO";
    case 1:
      return "COLLAB";
    case 2:
      return "EXAMPLE";
    default:
      return "UNKNOWN";
  }
}

FeatureSchema FeatureSchema::tutoring130() {
  return FeatureSchema{130,
                       {{"autonomy", 10},
                        {"temporal", 22},
                        {"problem_solving", 31},
                        {"performance", 57},
                        {"hints", 10}}};
}

FeatureSchema FeatureSchema::plain(int dimension) { return FeatureSchema{dimension, {{"features", dimension}}}; }

void FeatureSchema::validate() const {
  if (dimension <= 0) throw SchemaError("feature schema dimension must be positive");
  if (groups.empty()) return;
  int total = 0;
  for (const auto& g : groups) total += g.size;
  if (total != dimension)
    throw SchemaError("feature groups sum to " + std::to_string(total) + " but dimension is " +
                      std::to_string(dimension));
}

void Trajectory::validate(int action_count) const {
  if (steps.empty()) throw SchemaError("trajectory '" + id + "' has no steps");
  const auto m = steps.front().state.size();
  double prev_time = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    if (s.state.size() != m)
      throw SchemaError("trajectory '" + id + "' step " + std::to_string(i) + " has dimension " +
                        std::to_string(s.state.size()) + ", expected " + std::to_string(m));
    if (!s.state.allFinite())
      throw SchemaError("trajectory '" + id + "' step " + std::to_string(i) + " has non-finite state");
    if (s.action < 0 || s.action >= action_count)
      throw SchemaError("trajectory '" + id + "' step " + std::to_string(i) + " action " +
                        std::to_string(s.action) + " outside [0," + std::to_string(action_count) + ")");
    if (!std::isfinite(s.time) || s.time < 0.0)
      throw SchemaError("trajectory '" + id + "' step " + std::to_string(i) + " has invalid time");
    if (s.time < prev_time)
      throw SchemaError("trajectory '" + id + "' times decrease at step " + std::to_string(i));
    prev_time = s.time;
  }
}

std::size_t Dataset::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

void Dataset::validate() const {
  schema.validate();
  for (const auto& t : trajectories) {
    t.validate(action_count);
    if (t.dimension() != schema.dimension)
      throw SchemaError("trajectory '" + t.id + "' has dimension " + std::to_string(t.dimension()) +
                        ", dataset declares " + std::to_string(schema.dimension));
  }
  if (stats && (stats->mean.size() != schema.dimension || stats->stddev.size() != schema.dimension))
    throw SchemaError("standardization statistics do not match dataset dimension");
}

Dataset make_dataset(std::vector<Trajectory> trajectories, int action_count) {
  Dataset d;
  const int m = trajectories.empty() ? 0 : trajectories.front().dimension();
  d.schema = m == 130 ? FeatureSchema::tutoring130() : FeatureSchema::plain(m);
  d.trajectories = std::move(trajectories);
  d.action_count = action_count;
  return d;
}

std::vector<Window> window_trajectory(const Trajectory& trajectory, int window) {
  if (window <= 0) throw ParameterError("window size must be positive");
  const int n = trajectory.length();
  if (window > n)
    throw LengthError("window size " + std::to_string(window) + " exceeds trajectory length " +
                      std::to_string(n));
  const int m = trajectory.dimension();
  std::vector<Window> out;
  out.reserve(n - window + 1);
  for (int k = 0; k + window <= n; ++k) {
    Window w;
    w.trajectory_id = trajectory.id;
    w.end_index = k + window - 1;
    w.stacked.resize(static_cast<Eigen::Index>(m) * window);
    for (int j = 0; j < window; ++j) w.stacked.segment(j * m, m) = trajectory.steps[k + j].state;
    w.time_gap = w.end_index > 0 ? trajectory.steps[w.end_index].time - trajectory.steps[w.end_index - 1].time
                                 : 0.0;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<int> window_labels_to_steps(const std::vector<int>& window_labels, int steps, int window) {
  if (static_cast<int>(window_labels.size()) != steps - window + 1)
    throw LengthError("window label count does not match trajectory length");
  std::vector<int> out(steps);
  for (int i = 0; i < steps; ++i) out[i] = window_labels[std::max(0, i - window + 1)];
  return out;
}

Standardization fit_standardization(const Dataset& data) {
  const int m = data.dimension();
  Vector sum = Vector::Zero(m);
  std::size_t n = 0;
  for (const auto& t : data.trajectories)
    for (const auto& s : t.steps) {
      if (s.state.size() != m) throw SchemaError("state dimension mismatch while fitting statistics");
      sum += s.state;
      ++n;
    }
  if (n == 0) throw DegenerateInputError("cannot fit standardization on an empty dataset");
  Vector mean = sum / static_cast<double>(n);
  Vector sq = Vector::Zero(m);
  for (const auto& t : data.trajectories)
    for (const auto& s : t.steps) sq += (s.state - mean).array().square().matrix();
  Vector sd = (sq / static_cast<double>(n)).array().sqrt();
  return Standardization{std::move(mean), std::move(sd)};
}

Vector standardize_state(const Vector& state, const Standardization& stats) {
  if (state.size() != stats.mean.size()) throw SchemaError("state dimension does not match statistics");
  Vector z(state.size());
  for (Eigen::Index j = 0; j < state.size(); ++j)
    z[j] = stats.stddev[j] < kConstantFeatureStd ? 0.0 : (state[j] - stats.mean[j]) / stats.stddev[j];
  return z;
}

Trajectory standardize_trajectory(const Trajectory& trajectory, const Standardization& stats) {
  Trajectory out = trajectory;
  for (auto& s : out.steps) s.state = standardize_state(s.state, stats);
  return out;
}

Dataset apply_standardization(const Dataset& data, const Standardization& stats) {
  if (stats.mean.size() != data.dimension() || stats.stddev.size() != data.dimension())
    throw SchemaError("standardization statistics have dimension " + std::to_string(stats.mean.size()) +
                      ", dataset has " + std::to_string(data.dimension()));
  Dataset out = data;
  for (auto& t : out.trajectories) t = standardize_trajectory(t, stats);
  out.stats = stats;
  return out;
}

std::pair<Dataset, Standardization> standardize(const Dataset& data, std::optional<Standardization> stats) {
  Standardization s = stats ? *stats : fit_standardization(data);
  return {apply_standardization(data, s), s};
}

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ (stream * 0x632be59bd9b4e019ULL)) ^ index);
}

}  // namespace evolal
