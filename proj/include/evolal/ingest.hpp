#pragma once

#include "evolal/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace evolal {

struct StudentRecord {
  std::string id;
  std::string semester;
  double pre = 0.0;   // normalized to [0, 100]
  double post = 0.0;  // normalized to [0, 100]
  Trajectory trajectory;
};

struct ParseOptions {
  bool strict = false;  // reject unknown fields
  int action_count = kDefaultActionCount;
};

// One JSON object per line:
//   {"id": str, "semester": str, "pre": float, "post": float,
//    "steps": [{"t": float, "state": [float...], "action": int}]}
// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<StudentRecord> parse_dataset(const std::filesystem::path& path, const ParseOptions& options = {});
std::vector<StudentRecord> parse_dataset(std::istream& in, const ParseOptions& options = {});

std::string serialize_record(const StudentRecord& record);
void write_dataset(const std::filesystem::path& path, std::span<const StudentRecord> records);

Dataset to_dataset(std::span<const StudentRecord> records, int action_count = kDefaultActionCount);

enum class PerformanceGroup { kLow = 0, kMedium = 1, kHigh = 2 };
enum class LearningGain { kLow, kHigh };

/// Monotone cut points splitting scores into low / medium / high.
/// A score below `low_upper` is low, below `medium_upper` medium, else high.
struct Quantizer {
  double low_upper = 100.0 / 3.0;
  double medium_upper = 200.0 / 3.0;

  PerformanceGroup group(double score) const;
  void validate() const;

  static Quantizer tertiles(std::span<const double> scores);
};

struct QLGLabel {
  PerformanceGroup pre;
  PerformanceGroup post;
  LearningGain label;
};

// High iff the post group is high or strictly above the pre group.
QLGLabel qlg_label(PerformanceGroup pre, PerformanceGroup post);
QLGLabel classify(const StudentRecord& record, const Quantizer& quantizer);

std::vector<StudentRecord> select_experts(std::span<const StudentRecord> records, const Quantizer& quantizer);
Dataset qlg_filter(std::span<const StudentRecord> records, const Quantizer& quantizer,
                   int action_count = kDefaultActionCount);

// Tertiles of the pooled pre-test scores.
Quantizer pretest_tertiles(std::span<const StudentRecord> records);

struct Fold {
  std::vector<std::string> train_semesters;
  std::string test_semester;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

enum class FoldMode {
  kCumulative,  // fold k trains on semesters 1..k and tests on k+1
  kPerPair,     // every earlier semester alone against every later one
};

FoldPlan temporal_folds(const std::vector<std::string>& semesters, FoldMode mode = FoldMode::kCumulative);

// Orders tags such as S21, F24 chronologically: year, then Spring < Summer < Fall.
// Unrecognized tags sort lexicographically after recognized ones.
std::vector<std::string> chronological_semesters(std::vector<std::string> tags);

}  // namespace evolal
