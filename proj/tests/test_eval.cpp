#include "evolal/error.hpp"
#include "evolal/eval.hpp"
#include "evolal/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace evolal;

namespace {

Matrix one_hot(const std::vector<int>& pred, int k) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(pred.size()), k);
  for (std::size_t i = 0; i < pred.size(); ++i) p(static_cast<Eigen::Index>(i), pred[i]) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("AUC hand case of 0.75") {
  const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
  const bool pos[] = {true, true, false, false};
  CHECK(binary_auc(s, pos) == doctest::Approx(0.75));

  const std::vector<int> labels{1, 1, 0, 0};
  Matrix p(4, 2);
  for (int i = 0; i < 4; ++i) p.row(i) << 1.0 - s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(i)];
  CHECK(compute_metrics(labels, p).auc == doctest::Approx(0.75));
}

TEST_CASE("AUC ties count one half") {
  const std::vector<double> s{0.5, 0.5, 0.5};
  const bool pos[] = {true, false, true};
  CHECK(binary_auc(s, pos) == doctest::Approx(0.5));
  const bool one[] = {true, true, true};
  CHECK_THROWS_AS(binary_auc(s, one), DegenerateInputError);
}

TEST_CASE("average precision hand case") {
  const std::vector<double> s{0.9, 0.8, 0.7};
  const bool pos[] = {true, false, true};
  CHECK(average_precision(s, pos) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
}

TEST_CASE("Jaccard hand case of 0.5") {
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const std::vector<int> pred{0, 0, 1, 0, 1, 1};
  const auto m = compute_metrics(labels, one_hot(pred, 2));
  CHECK(m.jaccard == doctest::Approx(0.5));
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("perfect predictions score one on every metric") {
  const std::vector<int> labels{0, 1, 2, 2, 1, 0};
  const auto m = compute_metrics(labels, one_hot(labels, 3));
  for (double v : m.values()) CHECK(v == 1.0);
  CHECK(m.warnings.empty());
}

TEST_CASE("absent classes contribute zero and warn") {
  const std::vector<int> labels{0, 0, 0};
  const auto m = compute_metrics(labels, one_hot({0, 0, 0}, 2));
  CHECK(m.accuracy == 1.0);
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(!m.warnings.empty());
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{3}, one_hot({0}, 2)), IndexError);
}

TEST_CASE("lowest-index argmax breaks probability ties") {
  const std::vector<int> labels{0, 1};
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  CHECK(compute_metrics(labels, p).accuracy == doctest::Approx(0.5));
}

TEST_CASE("Friedman statistic of 8 on a consistent ranking") {
  Matrix scores(3, 4);
  scores << 0.9, 0.8, 0.7, 0.95, 0.5, 0.6, 0.55, 0.65, 0.1, 0.2, 0.3, 0.4;
  const auto rc = friedman_conover(scores, {"a", "b", "c"});
  CHECK(rc.statistic == doctest::Approx(8.0));
  CHECK(rc.p_value == doctest::Approx(std::exp(-4.0)));
  CHECK(rc.mean_ranks == std::vector<double>{1.0, 2.0, 3.0});
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(rc.pairwise_p(i, i) == 1.0);
  // Identical ranks in every block: every pair differs.
  CHECK(rc.pairwise_p(0, 2) == 0.0);
  CHECK(rc.groups.size() == 3);
}

TEST_CASE("tied methods share a group") {
  Matrix scores(2, 3);
  scores << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
  const auto rc = friedman_conover(scores, {"a", "b"});
  CHECK(rc.statistic == 0.0);
  CHECK(rc.p_value == 1.0);
  REQUIRE(rc.groups.size() == 1);
  CHECK(rc.groups[0].size() == 2);
  CHECK(rank_comparison_json(rc).find("\"groups\"") != std::string::npos);
  CHECK_THROWS_AS(friedman_conover(Matrix::Zero(1, 3), {"a"}), DegenerateInputError);
}

TEST_CASE("descending ranks average ties") {
  const std::vector<double> v{0.3, 0.9, 0.3, 0.1};
  CHECK(descending_ranks(v) == std::vector<double>{2.5, 1.0, 2.5, 4.0});
}

TEST_CASE("Hungarian assignment") {
  Matrix s(3, 3);
  s << 1, 2, 3, 2, 4, 6, 3, 6, 9;
  // Anti-diagonal 3 + 4 + 3 = 10 is beaten by the diagonal 1 + 4 + 9 = 14.
  CHECK(hungarian_max(s) == std::vector<int>{0, 1, 2});
  Matrix r(2, 3);
  r << 0, 5, 1, 4, 0, 0;
  CHECK(hungarian_max(r) == std::vector<int>{1, 0});
  const Matrix t = r.transpose();
  CHECK(hungarian_max(t) == std::vector<int>{1, 0, -1});
}

TEST_CASE("matched accuracy and adjusted Rand index are permutation invariant") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  const std::vector<int> perm{2, 2, 0, 0, 1, 1};
  CHECK(matched_accuracy(truth, perm) == 1.0);
  CHECK(adjusted_rand_index(truth, perm) == doctest::Approx(1.0));
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(-0.5));
  CHECK(matched_accuracy(a, b) == doctest::Approx(0.5));
}

TEST_CASE("population mean and standard deviation") {
  const std::vector<double> v{1.0, 3.0};
  const auto ms = mean_std(v);
  CHECK(ms.mean == 2.0);
  CHECK(ms.stddev == 1.0);
}

TEST_CASE("leakage guard trips on shared ids") {
  StudentRecord a, b;
  a.id = "x";
  b.id = "x";
  CHECK_THROWS_AS(check_leakage(std::vector<StudentRecord>{a}, std::vector<StudentRecord>{b}), LeakageError);
  b.id = "y";
  CHECK_NOTHROW(check_leakage(std::vector<StudentRecord>{a}, std::vector<StudentRecord>{b}));
}

TEST_CASE("temporal cross-validation is deterministic across thread counts") {
  EmitterConfig ec;
  ec.students = 12;
  ec.steps = 6;
  ec.semesters = {"S21", "S22", "S24"};
  const auto data = gen_emitter(ec);
  const auto plan = temporal_folds({"S21", "S22", "S24"});
  // A stateless predictor that leans on the state's first coordinate.
  MethodSpec m{"lean", [](const Dataset&, uint64_t seed) {
                 return StepPredictor([seed](const Trajectory& t, int i) {
                   Vector p = Vector::Constant(3, 1.0);
                   p[(t.steps[static_cast<std::size_t>(i)].state[0] > 0.0 ? 0 : 1) + static_cast<int>(seed % 2)] += 1.0;
                   return Vector(p / p.sum());
                 });
               }};
  CVOptions opt;
  opt.seeds = {0, 1};
  opt.train_experts_only = false;
  opt.test_experts_only = false;
  const std::vector<MethodSpec> methods{m};
  const auto one = run_temporal_cv(data.records, methods, plan, opt);
  opt.jobs = 3;
  const auto three = run_temporal_cv(data.records, methods, plan, opt);
  CHECK(reports_csv(one) == reports_csv(three));
  CHECK(reports_markdown(one) == reports_markdown(three));
  REQUIRE(one.size() == 2);
  CHECK(one[0].folds.size() == 2);
  CHECK(one[0].folds[0].test_semester == "S22");
  CHECK(one[0].folds[1].train_semesters == std::vector<std::string>{"S21", "S22"});

  const auto csv = reports_csv(one);
  CHECK(csv.rfind("method,seed,fold,train,test,Accuracy,Recall,Precision,F1,AUC,AP,Jaccard\n", 0) == 0);
}

TEST_CASE("prepare_fold standardizes with training statistics only") {
  EmitterConfig ec;
  ec.students = 8;
  ec.steps = 5;
  ec.semesters = {"S21", "S22"};
  const auto data = gen_emitter(ec);
  CVOptions opt;
  opt.train_experts_only = false;
  opt.test_experts_only = false;
  const auto fd = prepare_fold(data.records, Fold{{"S21"}, "S22"}, opt);
  Vector sum = Vector::Zero(ec.dimension);
  double n = 0.0;
  for (const auto& t : fd.train.trajectories)
    for (const auto& s : t.steps) {
      sum += s.state;
      n += 1.0;
    }
  CHECK((sum / n).cwiseAbs().maxCoeff() < 1e-12);
  // The held-out raw states map through the training statistics.
  const auto& raw = data.records[1].trajectory.steps[0].state;
  const Vector expect = (raw - fd.stats.mean).cwiseQuotient(fd.stats.stddev);
  CHECK((fd.test.trajectories[0].steps[0].state - expect).norm() < 1e-12);
}
