#include "evolal/ingest.hpp"

#include "evolal/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <tuple>

namespace evolal {

using nlohmann::json;

namespace {

const std::set<std::string> kRecordFields{"id", "semester", "pre", "post", "steps"};
const std::set<std::string> kStepFields{"t", "state", "action"};

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field \"") + key + "\"", line);
  return *it;
}

double require_number(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_number()) throw SchemaError(std::string("field \"") + key + "\" must be a number", line);
  return v.get<double>();
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw SchemaError(std::string("field \"") + key + "\" must be a string", line);
  return v.get<std::string>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::size_t line) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.contains(it.key())) throw SchemaError("unknown field \"" + it.key() + "\"", line);
}

StudentRecord parse_record(const json& obj, std::size_t line, const ParseOptions& opt) {
  if (!obj.is_object()) throw SchemaError("record must be a JSON object", line);
  if (opt.strict) reject_unknown(obj, kRecordFields, line);
  StudentRecord r;
  r.id = require_string(obj, "id", line);
  r.semester = require_string(obj, "semester", line);
  r.pre = require_number(obj, "pre", line);
  r.post = require_number(obj, "post", line);
  for (double s : {r.pre, r.post})
    if (!(s >= 0.0 && s <= 100.0)) throw SchemaError("test scores must lie in [0, 100]", line);

  const auto& steps = require(obj, "steps", line);
  if (!steps.is_array() || steps.empty()) throw SchemaError("\"steps\" must be a nonempty array", line);
  r.trajectory.id = r.id;
  r.trajectory.semester = r.semester;
  r.trajectory.scores = Scores{r.pre, r.post};
  for (const auto& st : steps) {
    if (!st.is_object()) throw SchemaError("step must be a JSON object", line);
    if (opt.strict) reject_unknown(st, kStepFields, line);
    Step step;
    step.time = require_number(st, "t", line);
    const auto& action = require(st, "action", line);
    if (!action.is_number_integer()) throw SchemaError("field \"action\" must be an integer", line);
    step.action = action.get<int>();
    const auto& state = require(st, "state", line);
    if (!state.is_array() || state.empty()) throw SchemaError("\"state\" must be a nonempty array", line);
    step.state.resize(static_cast<Eigen::Index>(state.size()));
    for (std::size_t j = 0; j < state.size(); ++j) {
      if (!state[j].is_number()) throw SchemaError("state entries must be numbers", line);
      step.state[static_cast<Eigen::Index>(j)] = state[j].get<double>();
    }
    r.trajectory.steps.push_back(std::move(step));
  }
  try {
    r.trajectory.validate(opt.action_count);
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), line);
  }
  return r;
}

}  // namespace

std::vector<StudentRecord> parse_dataset(std::istream& in, const ParseOptions& options) {
  std::vector<StudentRecord> out;
  std::string text;
  std::size_t line = 0;
  int dimension = -1;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
    auto rec = parse_record(obj, line, options);
    if (dimension < 0) dimension = rec.trajectory.dimension();
    if (rec.trajectory.dimension() != dimension)
      throw SchemaError("state dimension " + std::to_string(rec.trajectory.dimension()) +
                            " differs from earlier records (" + std::to_string(dimension) + ")",
                        line);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<StudentRecord> parse_dataset(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  return parse_dataset(in, options);
}

std::string serialize_record(const StudentRecord& r) {
  json steps = json::array();
  for (const auto& s : r.trajectory.steps) {
    json st;
    st["t"] = s.time;
    st["state"] = std::vector<double>(s.state.data(), s.state.data() + s.state.size());
    st["action"] = s.action;
    steps.push_back(std::move(st));
  }
  json obj;
  obj["id"] = r.id;
  obj["semester"] = r.semester;
  obj["pre"] = r.pre;
  obj["post"] = r.post;
  obj["steps"] = std::move(steps);
  return obj.dump();
}

void write_dataset(const std::filesystem::path& path, std::span<const StudentRecord> records) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path.string());
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

Dataset to_dataset(std::span<const StudentRecord> records, int action_count) {
  std::vector<Trajectory> ts;
  ts.reserve(records.size());
  for (const auto& r : records) ts.push_back(r.trajectory);
  return make_dataset(std::move(ts), action_count);
}

PerformanceGroup Quantizer::group(double score) const {
  if (score < low_upper) return PerformanceGroup::kLow;
  if (score < medium_upper) return PerformanceGroup::kMedium;
  return PerformanceGroup::kHigh;
}

void Quantizer::validate() const {
  if (!(low_upper <= medium_upper)) throw ConfigError("quantizer boundaries must be nondecreasing");
}

Quantizer Quantizer::tertiles(std::span<const double> scores) {
  if (scores.empty()) return Quantizer{};
  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return Quantizer{quantile(1.0 / 3.0), quantile(2.0 / 3.0)};
}

QLGLabel qlg_label(PerformanceGroup pre, PerformanceGroup post) {
  const bool high = post == PerformanceGroup::kHigh || static_cast<int>(post) > static_cast<int>(pre);
  return QLGLabel{pre, post, high ? LearningGain::kHigh : LearningGain::kLow};
}

QLGLabel classify(const StudentRecord& record, const Quantizer& q) {
  return qlg_label(q.group(record.pre), q.group(record.post));
}

std::vector<StudentRecord> select_experts(std::span<const StudentRecord> records, const Quantizer& quantizer) {
  quantizer.validate();
  std::vector<StudentRecord> out;
  for (const auto& r : records)
    if (classify(r, quantizer).label == LearningGain::kHigh) out.push_back(r);
  return out;
}

Dataset qlg_filter(std::span<const StudentRecord> records, const Quantizer& quantizer, int action_count) {
  auto experts = select_experts(records, quantizer);
  Dataset d = to_dataset(experts, action_count);
  if (experts.empty() && !records.empty()) {
    const int m = records.front().trajectory.dimension();
    d.schema = m == 130 ? FeatureSchema::tutoring130() : FeatureSchema::plain(m);
  }
  return d;
}

Quantizer pretest_tertiles(std::span<const StudentRecord> records) {
  std::vector<double> pre;
  pre.reserve(records.size());
  for (const auto& r : records) pre.push_back(r.pre);
  return Quantizer::tertiles(pre);
}

FoldPlan temporal_folds(const std::vector<std::string>& semesters, FoldMode mode) {
  if (semesters.size() < 2) throw ConfigError("temporal cross-validation needs at least two semesters");
  std::set<std::string> seen(semesters.begin(), semesters.end());
  if (seen.size() != semesters.size()) throw ConfigError("semester list contains duplicates");
  FoldPlan plan;
  for (std::size_t k = 1; k < semesters.size(); ++k) {
    if (mode == FoldMode::kCumulative) {
      plan.folds.push_back(Fold{{semesters.begin(), semesters.begin() + static_cast<std::ptrdiff_t>(k)},
                                semesters[k]});
    } else {
      for (std::size_t i = 0; i < k; ++i) plan.folds.push_back(Fold{{semesters[i]}, semesters[k]});
    }
  }
  return plan;
}

std::vector<std::string> chronological_semesters(std::vector<std::string> tags) {
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  auto key = [](const std::string& tag) -> std::tuple<int, int, int, std::string> {
    if (tag.size() == 3 && std::isdigit(static_cast<unsigned char>(tag[1])) &&
        std::isdigit(static_cast<unsigned char>(tag[2]))) {
      const int year = std::stoi(tag.substr(1));
      int season = -1;
      switch (tag[0]) {
        case 'S':
          season = 0;
          break;
        case 'U':
          season = 1;
          break;
        case 'F':
          season = 2;
          break;
        default:
          break;
      }
      if (season >= 0) return {0, year, season, tag};
    }
    return {1, 0, 0, tag};
  };
  std::stable_sort(tags.begin(), tags.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return tags;
}

}  // namespace evolal
