#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evolal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Pedagogical decisions offered at each problem.
enum class Action : int { kSolo = 0, kCollab = 1, kExample = 2 };

inline constexpr int kDefaultActionCount = 3;

std::string_view action_label(int id);

struct FeatureGroup {
  std::string name;
  int size = 0;
};

/// Column layout of a state vector. The 130-feature tutoring schema carries
/// named groups; synthetic data uses a single anonymous group.
struct FeatureSchema {
  int dimension = 0;
  std::vector<FeatureGroup> groups;

  static FeatureSchema tutoring130();
  static FeatureSchema plain(int dimension);
  void validate() const;
};

struct Step {
  Vector state;
  int action = 0;
  double time = 0.0;  // seconds since trajectory start
};

struct Scores {
  double pre = 0.0;
  double post = 0.0;
};

struct Trajectory {
  std::string id;
  std::string semester;
  std::vector<Step> steps;
  std::optional<Scores> scores;

  int length() const { return static_cast<int>(steps.size()); }
  int dimension() const { return steps.empty() ? 0 : static_cast<int>(steps.front().state.size()); }
  // Throws SchemaError on empty trajectories, ragged states, non-finite
  // entries, decreasing times or out-of-range actions.
  void validate(int action_count) const;
};

struct Standardization {
  Vector mean;
  Vector stddev;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  FeatureSchema schema;
  std::optional<Standardization> stats;
  int action_count = kDefaultActionCount;

  int dimension() const { return schema.dimension; }
  std::size_t total_steps() const;
  void validate() const;
};

// Build a dataset around trajectories, inferring a plain schema from the
// first step when none is known.
Dataset make_dataset(std::vector<Trajectory> trajectories, int action_count = kDefaultActionCount);

struct Window {
  std::string trajectory_id;
  int end_index = 0;
  Vector stacked;         // states end-w+1 .. end, oldest first
  double time_gap = 0.0;  // time(end) - time(end-1); 0 for the first window
};

std::vector<Window> window_trajectory(const Trajectory& trajectory, int window);

// Per-step labels from per-window labels: steps before the first window
// inherit the first window's label.
std::vector<int> window_labels_to_steps(const std::vector<int>& window_labels, int steps, int window);

// Features with stddev below this are treated as constant and map to 0.
inline constexpr double kConstantFeatureStd = 1e-12;

Standardization fit_standardization(const Dataset& data);
Vector standardize_state(const Vector& state, const Standardization& stats);
Trajectory standardize_trajectory(const Trajectory& trajectory, const Standardization& stats);
Dataset apply_standardization(const Dataset& data, const Standardization& stats);

// Fits statistics when none are supplied. The returned statistics are the
// ones applied, so callers can reuse them on held-out data.
std::pair<Dataset, Standardization> standardize(const Dataset& data,
                                                std::optional<Standardization> stats = std::nullopt);

uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index = 0);

}  // namespace evolal
