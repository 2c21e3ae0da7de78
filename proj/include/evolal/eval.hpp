#pragma once

#include "evolal/core.hpp"
#include "evolal/ingest.hpp"

#include <array>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evolal {

inline constexpr std::array<const char*, 7> kMetricNames{"Accuracy", "Recall", "Precision", "F1",
                                                         "AUC",      "AP",     "Jaccard"};

// Multi-class averages are macro over classes.
struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double ap = 0.0;
  double jaccard = 0.0;
  std::vector<std::string> warnings;

  std::array<double, 7> values() const { return {accuracy, recall, precision, f1, auc, ap, jaccard}; }
};

/// `probs` holds one probability row per sample. Predicted class is the
/// lowest-index argmax. A per-class quantity with an empty denominator
/// contributes 0 to its macro average and records a warning.
Metrics compute_metrics(std::span<const int> labels, const Matrix& probs);

// Mann-Whitney AUC with average ranks for ties. Requires both classes.
double binary_auc(std::span<const double> scores, std::span<const bool> positive);
// Step-wise average precision over distinct score thresholds. Requires a positive.
double average_precision(std::span<const double> scores, std::span<const bool> positive);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
};
MeanStd mean_std(std::span<const double> values);

struct FoldResult {
  std::vector<std::string> train_semesters;
  std::string test_semester;
  std::size_t train_trajectories = 0;
  std::size_t test_steps = 0;
  Metrics metrics;
};

struct MetricReport {
  std::string method;
  uint64_t seed = 0;
  std::vector<FoldResult> folds;
  std::array<MeanStd, 7> aggregate{};

  void finalize();
};

// Causal step predictor: probabilities for step t given steps [0, t] states
// and actions of steps [0, t).
using StepPredictor = std::function<Vector(const Trajectory& trajectory, int t)>;

struct MethodSpec {
  std::string name;
  std::function<StepPredictor(const Dataset& train, uint64_t seed)> fit;
};

struct CVOptions {
  std::vector<uint64_t> seeds{0};
  int jobs = 1;
  bool train_experts_only = true;
  bool test_experts_only = true;
  std::optional<Quantizer> quantizer;  // default: tertiles of training pre-test scores
  int action_count = kDefaultActionCount;
};

struct FoldData {
  Dataset train;  // standardized
  Dataset test;   // standardized with training statistics
  Standardization stats;
  Quantizer quantizer;
};

// Throws LeakageError when any id appears on both sides.
void check_leakage(std::span<const StudentRecord> train, std::span<const StudentRecord> test);

FoldData prepare_fold(std::span<const StudentRecord> records, const Fold& fold, const CVOptions& options);

/// One report per (method, seed), folds in plan order. Work items run on up
/// to `jobs` threads; results do not depend on the thread count.
std::vector<MetricReport> run_temporal_cv(std::span<const StudentRecord> records, std::span<const MethodSpec> methods,
                                          const FoldPlan& plan, const CVOptions& options);

// Scores every step of every test trajectory with the predictor.
Metrics score_predictor(const StepPredictor& predictor, const Dataset& test);

std::string reports_csv(std::span<const MetricReport> reports);
std::string reports_markdown(std::span<const MetricReport> reports);
// One row per method: each metric averaged over every fold of every seed.
std::string summary_csv(std::span<const MetricReport> reports);
// Reads the per-fold rows of reports_csv output back; aggregates are recomputed.
std::vector<MetricReport> parse_reports_csv(std::istream& in);

struct RankComparison {
  std::vector<std::string> methods;
  std::vector<double> mean_ranks;  // 1 = best
  double statistic = 0.0;
  double p_value = 1.0;
  Matrix pairwise_p;
  double alpha = 0.05;
  std::vector<std::vector<int>> groups;  // method indices, ordered by mean rank
};

/// `scores` is methods x blocks, higher is better. Friedman statistic
/// 12n/(k(k+1)) sum_j (Rbar_j - (k+1)/2)^2 with a chi-square(k-1) p-value;
/// Conover all-pairs t-tests on rank sums with (n-1)(k-1) degrees of freedom.
RankComparison friedman_conover(const Matrix& scores, std::vector<std::string> names, double alpha = 0.05);
std::string rank_comparison_json(const RankComparison& rc);

/// Friedman/Conover over one metric (index into kMetricNames). Blocks are
/// (seed, fold) pairs, which every method must share.
RankComparison compare_reports(std::span<const MetricReport> reports, std::size_t metric, double alpha = 0.05);

// Average ranks within one block, 1 for the largest value.
std::vector<double> descending_ranks(std::span<const double> values);

/// Maximum-weight assignment on a square or rectangular score matrix;
/// returns for every row its matched column (-1 when unmatched).
std::vector<int> hungarian_max(const Matrix& score);

// Fraction of positions where the mapped prediction equals the truth under
// the best one-to-one label matching.
double matched_accuracy(std::span<const int> truth, std::span<const int> predicted);
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace evolal
