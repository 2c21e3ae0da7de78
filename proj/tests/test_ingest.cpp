#include "evolal/error.hpp"
#include "evolal/ingest.hpp"

#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

using namespace evolal;

namespace {

std::string record_line(const std::string& id, const std::string& sem, double pre, double post) {
  std::ostringstream os;
  os << R"({"id":")" << id << R"(","semester":")" << sem << R"(","pre":)" << pre << R"(,"post":)" << post
     << R"(,"steps":[{"t":0,"state":[0.5,1.5],"action":0},{"t":2.5,"state":[1,2],"action":2}]})";
  return os.str();
}

// Semester sizes and expert counts mirror the study cohort.
std::vector<StudentRecord> cohort() {
  const std::vector<std::tuple<std::string, int, int>> layout{
      {"S21", 67, 18}, {"S22", 56, 24}, {"S24", 54, 23}, {"F24", 44, 24}};
  std::ostringstream os;
  for (const auto& [sem, total, experts] : layout)
    for (int i = 0; i < total; ++i)
      os << record_line(sem + "_" + std::to_string(i), sem, 50.0, i < experts ? 90.0 : 40.0) << "\n";
  std::istringstream in(os.str());
  return parse_dataset(in);
}

}  // namespace

TEST_CASE("cohort parses to 221 records in order") {
  auto records = cohort();
  CHECK(records.size() == 221);
  CHECK(records.front().id == "S21_0");
  CHECK(records.back().id == "F24_43");
  CHECK(records[0].trajectory.steps[1].time == doctest::Approx(2.5));
  CHECK(records[0].trajectory.scores->post == doctest::Approx(90.0));
}

TEST_CASE("expert filter keeps 89 students") {
  auto records = cohort();
  Quantizer q{100.0 / 3.0, 200.0 / 3.0};
  auto experts = select_experts(records, q);
  CHECK(experts.size() == 89);
  std::map<std::string, int> per;
  for (const auto& r : experts) per[r.semester]++;
  CHECK(per["S21"] == 18);
  CHECK(per["S22"] == 24);
  CHECK(per["S24"] == 23);
  CHECK(per["F24"] == 24);
  auto d = qlg_filter(records, q);
  CHECK(d.trajectories.size() == 89);
}

TEST_CASE("QLG table over all nine group pairs") {
  using G = PerformanceGroup;
  const G gs[] = {G::kLow, G::kMedium, G::kHigh};
  for (G pre : gs)
    for (G post : gs) {
      const bool expect_high = post == G::kHigh || static_cast<int>(post) > static_cast<int>(pre);
      CHECK((qlg_label(pre, post).label == LearningGain::kHigh) == expect_high);
    }
  CHECK(qlg_label(G::kMedium, G::kHigh).label == LearningGain::kHigh);
  CHECK(qlg_label(G::kMedium, G::kLow).label == LearningGain::kLow);
  CHECK(qlg_label(G::kHigh, G::kHigh).label == LearningGain::kHigh);
  CHECK(qlg_label(G::kLow, G::kMedium).label == LearningGain::kHigh);
  CHECK(qlg_label(G::kLow, G::kLow).label == LearningGain::kLow);
}

TEST_CASE("tertile quantizer on pooled pre-test scores") {
  std::vector<double> s{0, 10, 20, 30, 40, 50, 60};
  auto q = Quantizer::tertiles(s);
  CHECK(q.low_upper == doctest::Approx(20.0));
  CHECK(q.medium_upper == doctest::Approx(40.0));
  CHECK(q.group(19.9) == PerformanceGroup::kLow);
  CHECK(q.group(20.0) == PerformanceGroup::kMedium);
  CHECK(q.group(40.0) == PerformanceGroup::kHigh);
  Quantizer bad{60.0, 10.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("empty input parses to no records") {
  std::istringstream in("");
  CHECK(parse_dataset(in).empty());
  std::istringstream blank("\n\n  \n");
  CHECK(parse_dataset(blank).empty());
}

TEST_CASE("missing action is a schema error carrying the line") {
  std::string bad = R"({"id":"x","semester":"S21","pre":1,"post":2,"steps":[{"t":0,"state":[1]}]})";
  std::istringstream in(record_line("a", "S21", 1, 2) + "\n" + bad + "\n");
  try {
    parse_dataset(in);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("action") != std::string::npos);
  }
}

TEST_CASE("malformed JSON is a parse error at its line") {
  std::istringstream in(record_line("a", "S21", 1, 2) + "\n\n{not json\n");
  try {
    parse_dataset(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("strict mode rejects unknown fields and scores are range checked") {
  std::string extra = R"({"id":"x","semester":"S21","pre":1,"post":2,"extra":1,"steps":[{"t":0,"state":[1],"action":0}]})";
  {
    std::istringstream in(extra);
    CHECK(parse_dataset(in).size() == 1);
  }
  {
    std::istringstream in(extra);
    CHECK_THROWS_AS(parse_dataset(in, ParseOptions{true, 3}), SchemaError);
  }
  std::istringstream over(record_line("a", "S21", 1, 101));
  CHECK_THROWS_AS(parse_dataset(over), SchemaError);
  std::istringstream ragged(record_line("a", "S21", 1, 2) + "\n" +
                            R"({"id":"b","semester":"S21","pre":1,"post":2,"steps":[{"t":0,"state":[1],"action":0}]})");
  CHECK_THROWS_AS(parse_dataset(ragged), SchemaError);
}

TEST_CASE("parse, serialize, parse is the identity") {
  auto records = cohort();
  std::ostringstream os;
  for (const auto& r : records) os << serialize_record(r) << "\n";
  std::istringstream in(os.str());
  auto again = parse_dataset(in);
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(again[i].id == records[i].id);
    CHECK(again[i].semester == records[i].semester);
    CHECK(again[i].pre == records[i].pre);
    CHECK(again[i].post == records[i].post);
    REQUIRE(again[i].trajectory.steps.size() == records[i].trajectory.steps.size());
    for (std::size_t k = 0; k < records[i].trajectory.steps.size(); ++k) {
      CHECK(again[i].trajectory.steps[k].state == records[i].trajectory.steps[k].state);
      CHECK(again[i].trajectory.steps[k].action == records[i].trajectory.steps[k].action);
      CHECK(again[i].trajectory.steps[k].time == records[i].trajectory.steps[k].time);
    }
  }
}

TEST_CASE("cumulative temporal folds") {
  auto plan = temporal_folds({"S21", "S22", "S24", "F24"});
  REQUIRE(plan.folds.size() == 3);
  CHECK(plan.folds[0].train_semesters == std::vector<std::string>{"S21"});
  CHECK(plan.folds[0].test_semester == "S22");
  CHECK(plan.folds[2].train_semesters == std::vector<std::string>{"S21", "S22", "S24"});
  CHECK(plan.folds[2].test_semester == "F24");
  for (const auto& f : plan.folds)
    for (const auto& s : f.train_semesters) CHECK(s != f.test_semester);
  CHECK_THROWS_AS(temporal_folds({"S21"}), ConfigError);
  CHECK(temporal_folds({"S21", "S22", "S24"}, FoldMode::kPerPair).folds.size() == 3);
}

TEST_CASE("fold splits never share trajectory ids") {
  auto records = cohort();
  auto plan = temporal_folds({"S21", "S22", "S24", "F24"});
  for (const auto& f : plan.folds) {
    std::set<std::string> train_ids;
    for (const auto& r : records)
      for (const auto& s : f.train_semesters)
        if (r.semester == s) train_ids.insert(r.id);
    for (const auto& r : records)
      if (r.semester == f.test_semester) CHECK_FALSE(train_ids.contains(r.id));
  }
}

TEST_CASE("chronological ordering of semester tags") {
  CHECK(chronological_semesters({"F24", "S22", "S24", "S21", "U24"}) ==
        std::vector<std::string>{"S21", "S22", "S24", "U24", "F24"});
}
