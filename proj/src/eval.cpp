#include "evolal/eval.hpp"

#include "evolal/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace evolal {

namespace {

double safe_ratio(double num, double den, const std::string& what, std::vector<std::string>& warnings) {
  if (den > 0.0) return num / den;
  warnings.push_back(what);
  return 0.0;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

double binary_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DegenerateInputError("AUC needs both positive and negative samples");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double average_precision(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("scores and labels differ in length");
  const std::size_t n = scores.size();
  const double total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0.0) throw DegenerateInputError("average precision needs a positive sample");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      (positive[idx[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

Metrics compute_metrics(std::span<const int> labels, const Matrix& probs) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (probs.rows() != n) throw ShapeError("one probability row per label is required");
  const int k = static_cast<int>(probs.cols());
  if (n == 0 || k == 0) throw DegenerateInputError("no samples to score");
  std::vector<int> pred(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw IndexError("label outside the class range");
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (probs(i, c) > probs(i, best)) best = c;
    pred[static_cast<std::size_t>(i)] = best;
  }
  Metrics m;
  double correct = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) correct += pred[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)];
  m.accuracy = correct / static_cast<double>(n);

  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::unique_ptr<bool[]> pos(new bool[static_cast<std::size_t>(n)]);
    bool any_pos = false, any_neg = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool truth = labels[static_cast<std::size_t>(i)] == c;
      const bool guess = pred[static_cast<std::size_t>(i)] == c;
      tp += truth && guess;
      fp += !truth && guess;
      fn += truth && !guess;
      scores[static_cast<std::size_t>(i)] = probs(i, c);
      pos[static_cast<std::size_t>(i)] = truth;
      (truth ? any_pos : any_neg) = true;
    }
    const std::string tag = "class " + std::to_string(c) + ": ";
    const double r = safe_ratio(tp, tp + fn, tag + "recall undefined", m.warnings);
    const double p = safe_ratio(tp, tp + fp, tag + "precision undefined", m.warnings);
    m.recall += r;
    m.precision += p;
    m.f1 += r + p > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    m.jaccard += safe_ratio(tp, tp + fp + fn, tag + "jaccard undefined", m.warnings);
    std::span<const bool> ps(pos.get(), static_cast<std::size_t>(n));
    if (any_pos && any_neg) {
      m.auc += binary_auc(scores, ps);
    } else {
      m.warnings.push_back(tag + "AUC undefined");
    }
    if (any_pos) {
      m.ap += average_precision(scores, ps);
    } else {
      m.warnings.push_back(tag + "AP undefined");
    }
  }
  const double kk = static_cast<double>(k);
  m.recall /= kk;
  m.precision /= kk;
  m.f1 /= kk;
  m.jaccard /= kk;
  m.auc /= kk;
  m.ap /= kk;
  return m;
}

MeanStd mean_std(std::span<const double> v) {
  if (v.empty()) return {};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

void MetricReport::finalize() {
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    std::vector<double> vals;
    for (const auto& f : folds) vals.push_back(f.metrics.values()[k]);
    aggregate[k] = mean_std(vals);
  }
}

void check_leakage(std::span<const StudentRecord> train, std::span<const StudentRecord> test) {
  std::set<std::string> ids;
  for (const auto& r : train) ids.insert(r.id);
  for (const auto& r : test)
    if (ids.contains(r.id)) throw LeakageError("trajectory '" + r.id + "' appears in both training and test data");
}

FoldData prepare_fold(std::span<const StudentRecord> records, const Fold& fold, const CVOptions& opt) {
  std::vector<StudentRecord> train, test;
  const std::set<std::string> train_sem(fold.train_semesters.begin(), fold.train_semesters.end());
  for (const auto& r : records) {
    if (train_sem.contains(r.semester)) train.push_back(r);
    if (r.semester == fold.test_semester) test.push_back(r);
  }
  check_leakage(train, test);
  if (train.empty()) throw DegenerateInputError("fold has no training records");
  if (test.empty()) throw DegenerateInputError("fold has no test records");
  FoldData fd;
  fd.quantizer = opt.quantizer ? *opt.quantizer : pretest_tertiles(train);
  if (opt.train_experts_only) train = select_experts(train, fd.quantizer);
  if (opt.test_experts_only) test = select_experts(test, fd.quantizer);
  if (train.empty()) throw DegenerateInputError("fold has no expert training records");
  if (test.empty()) throw DegenerateInputError("fold has no expert test records");
  auto [tr, stats] = standardize(to_dataset(train, opt.action_count));
  Dataset te = apply_standardization(to_dataset(test, opt.action_count), stats);
  fd.train = std::move(tr);
  fd.test = std::move(te);
  fd.stats = std::move(stats);
  return fd;
}

Metrics score_predictor(const StepPredictor& predictor, const Dataset& test) {
  std::vector<int> labels;
  std::vector<Vector> rows;
  for (const auto& t : test.trajectories)
    for (int i = 0; i < t.length(); ++i) {
      rows.push_back(predictor(t, i));
      labels.push_back(t.steps[static_cast<std::size_t>(i)].action);
    }
  if (rows.empty()) throw DegenerateInputError("no test steps");
  Matrix p(static_cast<Eigen::Index>(rows.size()), test.action_count);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != test.action_count) throw ShapeError("predictor returned the wrong number of classes");
    p.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return compute_metrics(labels, p);
}

std::vector<MetricReport> run_temporal_cv(std::span<const StudentRecord> records, std::span<const MethodSpec> methods,
                                          const FoldPlan& plan, const CVOptions& opt) {
  if (plan.folds.empty()) throw ConfigError("fold plan is empty");
  if (opt.seeds.empty()) throw ConfigError("at least one seed is required");
  std::vector<FoldData> folds;
  for (const auto& f : plan.folds) folds.push_back(prepare_fold(records, f, opt));

  struct Item {
    std::size_t method, seed, fold;
  };
  std::vector<Item> items;
  for (std::size_t m = 0; m < methods.size(); ++m)
    for (std::size_t s = 0; s < opt.seeds.size(); ++s)
      for (std::size_t f = 0; f < folds.size(); ++f) items.push_back({m, s, f});
  std::vector<FoldResult> results(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        const auto& it = items[i];
        const auto& fd = folds[it.fold];
        const auto predictor = methods[it.method].fit(fd.train, opt.seeds[it.seed]);
        FoldResult r;
        r.train_semesters = plan.folds[it.fold].train_semesters;
        r.test_semester = plan.folds[it.fold].test_semester;
        r.train_trajectories = fd.train.trajectories.size();
        r.test_steps = fd.test.total_steps();
        r.metrics = score_predictor(predictor, fd.test);
        results[i] = std::move(r);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(items.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<MetricReport> reports;
  for (std::size_t m = 0; m < methods.size(); ++m)
    for (std::size_t s = 0; s < opt.seeds.size(); ++s) {
      MetricReport rep;
      rep.method = methods[m].name;
      rep.seed = opt.seeds[s];
      for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].method == m && items[i].seed == s) rep.folds.push_back(results[i]);
      rep.finalize();
      reports.push_back(std::move(rep));
    }
  return reports;
}

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

}  // namespace

std::string reports_csv(std::span<const MetricReport> reports) {
  std::ostringstream os;
  os << "method,seed,fold,train,test";
  for (const char* n : kMetricNames) os << ',' << n;
  os << '\n';
  for (const auto& r : reports) {
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
      const auto& fr = r.folds[f];
      os << r.method << ',' << r.seed << ',' << f + 1 << ',' << join(fr.train_semesters, "+") << ',' << fr.test_semester;
      for (double v : fr.metrics.values()) os << ',' << fmt("%.6f", v);
      os << '\n';
    }
    os << r.method << ',' << r.seed << ",mean,,";
    for (const auto& a : r.aggregate) os << ',' << fmt("%.6f", a.mean);
    os << '\n';
    os << r.method << ',' << r.seed << ",std,,";
    for (const auto& a : r.aggregate) os << ',' << fmt("%.6f", a.stddev);
    os << '\n';
  }
  return os.str();
}

std::string reports_markdown(std::span<const MetricReport> reports) {
  std::ostringstream os;
  os << "Macro-averaged over classes; mean ± population std across folds.\n\n";
  os << "| Method | Seed |";
  for (const char* n : kMetricNames) os << ' ' << n << " |";
  os << "\n|---|---|";
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& r : reports) {
    os << "| " << r.method << " | " << r.seed << " |";
    for (const auto& a : r.aggregate) os << ' ' << fmt("%.3f", a.mean) << " ± " << fmt("%.3f", a.stddev) << " |";
    os << '\n';
  }
  return os.str();
}

std::string summary_csv(std::span<const MetricReport> reports) {
  std::vector<std::string> names;
  std::vector<std::array<double, 7>> sums;
  std::vector<double> counts;
  for (const auto& r : reports) {
    auto it = std::find(names.begin(), names.end(), r.method);
    const auto m = static_cast<std::size_t>(it - names.begin());
    if (it == names.end()) {
      names.push_back(r.method);
      sums.emplace_back();
      sums.back().fill(0.0);
      counts.push_back(0.0);
    }
    for (const auto& f : r.folds) {
      const auto v = f.metrics.values();
      for (std::size_t k = 0; k < v.size(); ++k) sums[m][k] += v[k];
      counts[m] += 1.0;
    }
  }
  std::ostringstream os;
  os << "method";
  for (const char* n : kMetricNames) os << ',' << n;
  os << '\n';
  for (std::size_t m = 0; m < names.size(); ++m) {
    os << names[m];
    for (double s : sums[m]) os << ',' << fmt("%.6f", counts[m] > 0.0 ? s / counts[m] : 0.0);
    os << '\n';
  }
  return os.str();
}

std::vector<MetricReport> parse_reports_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw ParseError("report is empty", 1);
  ++lineno;
  if (split(line, ',').size() != 5 + kMetricNames.size()) throw ParseError("unexpected report header", 1);
  std::vector<MetricReport> reports;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5 + kMetricNames.size()) throw ParseError("wrong number of report columns", lineno);
    if (cells[2] == "mean" || cells[2] == "std") continue;
    uint64_t seed = 0;
    FoldResult fr;
    try {
      seed = std::stoull(cells[1]);
      std::array<double, 7> v{};
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::stod(cells[5 + k]);
      fr.metrics.accuracy = v[0];
      fr.metrics.recall = v[1];
      fr.metrics.precision = v[2];
      fr.metrics.f1 = v[3];
      fr.metrics.auc = v[4];
      fr.metrics.ap = v[5];
      fr.metrics.jaccard = v[6];
    } catch (const std::logic_error&) {
      throw ParseError("non-numeric report cell", lineno);
    }
    fr.train_semesters = split(cells[3], '+');
    fr.test_semester = cells[4];
    if (reports.empty() || reports.back().method != cells[0] || reports.back().seed != seed) {
      reports.push_back(MetricReport{cells[0], seed, {}, {}});
    }
    reports.back().folds.push_back(std::move(fr));
  }
  for (auto& r : reports) r.finalize();
  return reports;
}

RankComparison compare_reports(std::span<const MetricReport> reports, std::size_t metric, double alpha) {
  if (metric >= kMetricNames.size()) throw IndexError("metric index out of range");
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<std::string, double>>> blocks;  // per method: (block key, value)
  for (const auto& r : reports) {
    auto it = std::find(names.begin(), names.end(), r.method);
    if (it == names.end()) {
      names.push_back(r.method);
      blocks.emplace_back();
      it = names.end() - 1;
    }
    auto& b = blocks[static_cast<std::size_t>(it - names.begin())];
    for (const auto& f : r.folds)
      b.emplace_back(std::to_string(r.seed) + "/" + join(f.train_semesters, "+") + ">" + f.test_semester,
                     f.metrics.values()[metric]);
  }
  if (names.size() < 2) throw DegenerateInputError("comparison needs at least two methods");
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    auto& b = blocks[m];
    std::sort(b.begin(), b.end());
    for (std::size_t k = 1; k < b.size(); ++k)
      if (b[k].first == b[k - 1].first)
        throw ShapeError("method " + names[m] + " appears twice for block " + b[k].first);
  }
  const auto& key = blocks.front();
  Matrix scores(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(key.size()));
  for (std::size_t m = 0; m < names.size(); ++m) {
    if (blocks[m].size() != key.size()) throw ShapeError("methods were evaluated on different folds or seeds");
    for (std::size_t k = 0; k < key.size(); ++k) {
      if (blocks[m][k].first != key[k].first) throw ShapeError("methods were evaluated on different folds or seeds");
      scores(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = blocks[m][k].second;
    }
  }
  return friedman_conover(scores, names, alpha);
}

std::vector<double> descending_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

RankComparison friedman_conover(const Matrix& scores, std::vector<std::string> names, double alpha) {
  const auto k = scores.rows();
  const auto b = scores.cols();
  if (k < 2 || b < 2) throw DegenerateInputError("rank comparison needs at least two methods and two blocks");
  if (static_cast<Eigen::Index>(names.size()) != k) throw ShapeError("one name per method is required");
  RankComparison rc;
  rc.methods = std::move(names);
  rc.alpha = alpha;
  Matrix ranks(k, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    std::vector<double> col(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) col[static_cast<std::size_t>(i)] = scores(i, j);
    const auto r = descending_ranks(col);
    for (Eigen::Index i = 0; i < k; ++i) ranks(i, j) = r[static_cast<std::size_t>(i)];
  }
  const Vector sums = ranks.rowwise().sum();
  const double kd = static_cast<double>(k), bd = static_cast<double>(b);
  rc.mean_ranks.resize(static_cast<std::size_t>(k));
  double ss = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    rc.mean_ranks[static_cast<std::size_t>(i)] = sums[i] / bd;
    ss += std::pow(sums[i] / bd - (kd + 1.0) / 2.0, 2);
  }
  rc.statistic = 12.0 * bd / (kd * (kd + 1.0)) * ss;
  rc.p_value = rc.statistic > 0.0
                   ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(kd - 1.0), rc.statistic))
                   : 1.0;

  const double a1 = ranks.squaredNorm();
  const double denom2 = 2.0 * (bd * a1 - sums.squaredNorm()) / ((bd - 1.0) * (kd - 1.0));
  const double df = (bd - 1.0) * (kd - 1.0);
  rc.pairwise_p = Matrix::Ones(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double diff = std::abs(sums[i] - sums[j]);
      double p = 1.0;
      if (denom2 > 1e-12) {
        const double t = diff / std::sqrt(denom2);
        p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
      } else if (diff > 0.0) {
        p = 0.0;
      }
      rc.pairwise_p(i, j) = rc.pairwise_p(j, i) = std::min(1.0, p);
    }

  // Maximal runs of consecutive methods (by mean rank) with no significant pair.
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return rc.mean_ranks[static_cast<std::size_t>(x)] < rc.mean_ranks[static_cast<std::size_t>(y)]; });
  int last_end = -1;
  for (int start = 0; start < k; ++start) {
    int end = start;
    while (end + 1 < k) {
      bool ok = true;
      for (int m = start; m <= end && ok; ++m)
        ok = rc.pairwise_p(order[static_cast<std::size_t>(m)], order[static_cast<std::size_t>(end + 1)]) >= alpha;
      if (!ok) break;
      ++end;
    }
    if (end > last_end) {
      rc.groups.emplace_back(order.begin() + start, order.begin() + end + 1);
      last_end = end;
    }
  }
  return rc;
}

std::string rank_comparison_json(const RankComparison& rc) {
  nlohmann::ordered_json j;
  j["methods"] = rc.methods;
  j["mean_ranks"] = rc.mean_ranks;
  j["friedman_statistic"] = rc.statistic;
  j["p_value"] = rc.p_value;
  j["alpha"] = rc.alpha;
  std::vector<std::vector<double>> p;
  for (Eigen::Index i = 0; i < rc.pairwise_p.rows(); ++i) {
    p.emplace_back();
    for (Eigen::Index c = 0; c < rc.pairwise_p.cols(); ++c) p.back().push_back(rc.pairwise_p(i, c));
  }
  j["pairwise_p"] = p;
  std::vector<std::vector<std::string>> groups;
  for (const auto& g : rc.groups) {
    groups.emplace_back();
    for (int i : g) groups.back().push_back(rc.methods[static_cast<std::size_t>(i)]);
  }
  j["groups"] = groups;
  return j.dump(2);
}

std::vector<int> hungarian_max(const Matrix& score) {
  const bool flip = score.rows() > score.cols();
  const Matrix s = flip ? Matrix(score.transpose()) : score;
  const int n = static_cast<int>(s.rows()), m = static_cast<int>(s.cols());
  // Shortest augmenting path on cost = -score (1-based potentials).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(m + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j)
        if (!used[static_cast<std::size_t>(j)]) {
          const double cur = -s(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
          if (cur < minv[static_cast<std::size_t>(j)]) {
            minv[static_cast<std::size_t>(j)] = cur;
            way[static_cast<std::size_t>(j)] = j0;
          }
          if (minv[static_cast<std::size_t>(j)] < delta) {
            delta = minv[static_cast<std::size_t>(j)];
            j1 = j;
          }
        }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  if (!flip) return row_to_col;
  std::vector<int> out(static_cast<std::size_t>(score.rows()), -1);
  for (int r = 0; r < n; ++r)
    if (row_to_col[static_cast<std::size_t>(r)] >= 0) out[static_cast<std::size_t>(row_to_col[static_cast<std::size_t>(r)])] = r;
  return out;
}

double matched_accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("label sequences differ in length");
  if (truth.empty()) return 0.0;
  const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
  const int kp = *std::max_element(predicted.begin(), predicted.end()) + 1;
  if (*std::min_element(truth.begin(), truth.end()) < 0 || *std::min_element(predicted.begin(), predicted.end()) < 0)
    throw IndexError("labels must be nonnegative");
  Matrix c = Matrix::Zero(kp, kt);
  for (std::size_t i = 0; i < truth.size(); ++i) c(predicted[i], truth[i]) += 1.0;
  const auto match = hungarian_max(c);
  double hit = 0.0;
  for (int r = 0; r < kp; ++r)
    if (match[static_cast<std::size_t>(r)] >= 0) hit += c(r, match[static_cast<std::size_t>(r)]);
  return hit / static_cast<double>(truth.size());
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ShapeError("label sequences differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  Matrix c = Matrix::Zero(ka, kb);
  for (std::size_t i = 0; i < n; ++i) c(a[i], b[i]) += 1.0;
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index i = 0; i < ka; ++i)
    for (Eigen::Index j = 0; j < kb; ++j) sum_ij += choose2(c(i, j));
  for (Eigen::Index i = 0; i < ka; ++i) sum_a += choose2(c.row(i).sum());
  for (Eigen::Index j = 0; j < kb; ++j) sum_b += choose2(c.col(j).sum());
  const double total = choose2(static_cast<double>(n));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace evolal
