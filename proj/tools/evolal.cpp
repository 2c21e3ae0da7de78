#include "evolal/config.hpp"
#include "evolal/error.hpp"
#include "evolal/eval.hpp"
#include "evolal/ingest.hpp"
#include "evolal/methods.hpp"
#include "evolal/serialize.hpp"
#include "evolal/synth.hpp"
#include "evolal/themes.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace evolal;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitConvergence = 2;
constexpr int kExitUsage = 64;

// Options shared by every subcommand. A flag given on the command line (or
// through its environment fallback) wins over the config file.
struct Common {
  std::string config_path;
  uint64_t seed = 0;
  int jobs = 1;
  bool strict = false;
  std::string output_dir = RunConfig{}.output_dir;
};

class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& storage, const std::string& help,
                   std::function<void(RunConfig&)> apply) {
    CLI::Option* opt = app->add_option(name, storage, help)->capture_default_str();
    entries_.push_back({opt, std::move(apply)});
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& name, bool& storage, const std::string& help,
                        std::function<void(RunConfig&)> apply) {
    CLI::Option* opt = app->add_flag(name, storage, help);
    entries_.push_back({opt, std::move(apply)});
    return opt;
  }

  void apply(RunConfig& cfg) const {
    for (const auto& e : entries_)
      if (e.option->count() > 0) e.apply(cfg);
  }

 private:
  struct Entry {
    CLI::Option* option;
    std::function<void(RunConfig&)> apply;
  };
  std::vector<Entry> entries_;
};

int default_jobs() {
  const char* env = std::getenv("EVOLAL_JOBS");
  if (!env) return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (const std::logic_error&) {
    return 1;
  }
}

void add_common(CLI::App* app, Common& c, Overrides& ov) {
  app->add_option("--config", c.config_path, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  ov.add(app, "--seed", c.seed, "Run seed; every random stream derives from it",
         [&c](RunConfig& r) { r.seed = c.seed; });
  ov.add(app, "--jobs", c.jobs, "Worker threads (falls back to EVOLAL_JOBS)",
         [&c](RunConfig& r) { r.eval.jobs = c.jobs; })
      ->envname("EVOLAL_JOBS")
      ->check(CLI::PositiveNumber);
  app->add_flag("--strict", c.strict, "Reject unknown fields in data files");
  ov.add(app, "--output-dir", c.output_dir, "Directory receiving every artifact",
         [&c](RunConfig& r) { r.output_dir = c.output_dir; });
}

RunConfig resolve_config(const Common& c, const Overrides& ov) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  ov.apply(cfg);
  cfg.validate();
  return cfg;
}

// Artifacts are bare file names resolved inside the output directory.
fs::path artifact(const RunConfig& cfg, const std::string& name) {
  const fs::path p(name);
  if (name.empty() || p.has_parent_path() || p.is_absolute() || name == "." || name == "..")
    throw ConfigError("artifact name must be a plain file name: " + name);
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir) / p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

ParseOptions parse_options(const Common& c, const RunConfig& cfg) {
  ParseOptions po;
  po.strict = c.strict;
  po.action_count = cfg.synth.action_count;
  return po;
}

std::vector<StudentRecord> load_records(const std::string& data, const Common& c, const RunConfig& cfg) {
  if (!data.empty()) return parse_dataset(data, parse_options(c, cfg));
  EmitterConfig ec = cfg.synth;
  ec.seed = cfg.seed;
  return gen_emitter(ec).records;
}

Quantizer quantizer_for(const RunConfig& cfg, std::span<const StudentRecord> records) {
  return cfg.eval.quantizer ? *cfg.eval.quantizer : pretest_tertiles(records);
}

// Hyperparameter flags shared by train and evaluate. Defaults shown are the
// published settings.
struct Hyper {
  RunConfig d;
  int clusters = d.themes.partition.clusters;
  int window = d.themes.partition.window;
  double sparsity = d.themes.partition.sparsity;
  double consistency = d.themes.partition.consistency;
  double reward_strength = d.themes.partition.reward_strength;
  int policies = d.themes.em.clusters;
  int outer = d.themes.outer_iterations;
  double irl_beta = d.themes.irl.beta;
  double energy_weight = d.themes.em.edm.energy_weight;
  int epochs = d.themes.em.edm.train.epochs;
  std::string bc_loss = "squared";
};

void add_hyper(CLI::App* app, Hyper& h, Overrides& ov) {
  ov.add(app, "--clusters", h.clusters, "Partition clusters Q", [&h](RunConfig& r) { r.themes.partition.clusters = h.clusters; })
      ->check(CLI::PositiveNumber);
  ov.add(app, "--window", h.window, "Partition window length", [&h](RunConfig& r) { r.themes.partition.window = h.window; })
      ->check(CLI::PositiveNumber);
  ov.add(app, "--sparsity", h.sparsity, "Graphical-lasso penalty", [&h](RunConfig& r) { r.themes.partition.sparsity = h.sparsity; });
  ov.add(app, "--consistency", h.consistency, "Label-switch penalty",
         [&h](RunConfig& r) { r.themes.partition.consistency = h.consistency; });
  ov.add(app, "--reward-strength", h.reward_strength, "Reward regulation weight (0 disables)",
         [&h](RunConfig& r) { r.themes.partition.reward_strength = h.reward_strength; });
  ov.add(app, "--policies", h.policies, "Mixture policies O", [&h](RunConfig& r) { r.themes.em.clusters = h.policies; })
      ->check(CLI::PositiveNumber);
  ov.add(app, "--outer-iterations", h.outer, "THEMES outer passes",
         [&h](RunConfig& r) { r.themes.outer_iterations = h.outer; })
      ->check(CLI::PositiveNumber);
  ov.add(app, "--irl-beta", h.irl_beta, "Boltzmann inverse temperature", [&h](RunConfig& r) { r.themes.irl.beta = h.irl_beta; });
  ov.add(app, "--energy-weight", h.energy_weight, "EDM energy-loss weight",
         [&h](RunConfig& r) { r.themes.em.edm.energy_weight = h.energy_weight; });
  ov.add(app, "--epochs", h.epochs, "Training epochs of every policy network",
         [&h](RunConfig& r) {
           r.themes.em.edm.train.epochs = h.epochs;
           r.bc.epochs = h.epochs;
           r.dqn.train.epochs = h.epochs;
         })
      ->check(CLI::PositiveNumber);
  ov.add(app, "--bc-loss", h.bc_loss, "Behavior-cloning loss",
         [&h](RunConfig& r) { r.bc_loss = h.bc_loss == "squared" ? DataLoss::kSquared : DataLoss::kCrossEntropy; })
      ->check(CLI::IsMember({"squared", "cross-entropy"}));
}

int run_synth(const Common& c, const Overrides& ov, const std::string& out, const std::string& truth_out) {
  RunConfig cfg = resolve_config(c, ov);
  EmitterConfig ec = cfg.synth;
  ec.seed = cfg.seed;
  const auto data = gen_emitter(ec);
  const fs::path dp = artifact(cfg, out);
  const fs::path tp = artifact(cfg, truth_out);
  write_dataset(dp, data.records);
  write_truth(tp, data.truth);
  std::cout << "wrote " << data.records.size() << " students to " << dp.string() << " and truth to " << tp.string() << "\n";
  return 0;
}

int run_ingest(const Common& c, const Overrides& ov, const std::vector<std::string>& files) {
  const RunConfig cfg = resolve_config(c, ov);
  int status = 0;
  for (const auto& f : files) {
    try {
      const auto records = parse_dataset(f, parse_options(c, cfg));
      std::set<std::string> semesters;
      std::size_t steps = 0;
      for (const auto& r : records) {
        semesters.insert(r.semester);
        steps += r.trajectory.steps.size();
      }
      std::cout << f << ": " << records.size() << " students, " << steps << " steps, " << semesters.size()
                << " semesters\n";
    } catch (const Error& e) {
      std::cerr << f << ": " << e.what() << "\n";
      status = kExitValidation;
    }
  }
  return status;
}

int run_filter(const Common& c, const Overrides& ov, const std::string& data, const std::string& out) {
  const RunConfig cfg = resolve_config(c, ov);
  const auto records = load_records(data, c, cfg);
  const Quantizer q = quantizer_for(cfg, records);
  const auto experts = select_experts(records, q);
  const fs::path p = artifact(cfg, out);
  write_dataset(p, experts);
  std::cout << "kept " << experts.size() << " of " << records.size() << " students (cuts " << q.low_upper << ", "
            << q.medium_upper << ") in " << p.string() << "\n";
  return 0;
}

int run_train(const Common& c, const Overrides& ov, const std::string& method, const std::string& data,
              const std::vector<std::string>& semesters, const std::string& out) {
  const RunConfig cfg = resolve_config(c, ov);
  auto records = load_records(data, c, cfg);
  if (!semesters.empty()) {
    std::erase_if(records, [&](const StudentRecord& r) {
      return std::find(semesters.begin(), semesters.end(), r.semester) == semesters.end();
    });
  }
  if (records.empty()) throw DegenerateInputError("no training students");
  const Quantizer q = quantizer_for(cfg, records);
  const Dataset raw = cfg.eval.train_experts_only ? qlg_filter(records, q, cfg.synth.action_count)
                                                  : to_dataset(records, cfg.synth.action_count);
  if (raw.trajectories.empty()) throw DegenerateInputError("no expert students in the training data");
  const auto [train, stats] = standardize(raw);
  const TrainedMethod tm = train_method(method, train, cfg, cfg.seed);

  Json doc = Json::object();
  doc["method"] = method;
  doc["seed"] = cfg.seed;
  doc["experts_only"] = cfg.eval.train_experts_only;
  doc["quantizer"] = {{"low_upper", q.low_upper}, {"medium_upper", q.medium_upper}};
  doc["students"] = train.trajectories.size();
  doc["standardization"] = to_json(stats);
  doc["model"] = tm.describe();
  const std::string name = out.empty() ? "model_" + method + ".json" : out;
  const fs::path p = artifact(cfg, name);
  write_text(p, doc.dump(1) + "\n");
  std::cout << "trained " << method << " on " << train.trajectories.size() << " students; model in " << p.string()
            << "\n";
  return 0;
}

int run_evaluate(const Common& c, const Overrides& ov, const std::string& data, const std::string& out,
                 bool seed_only) {
  RunConfig cfg = resolve_config(c, ov);
  if (seed_only) cfg.eval.seeds = {cfg.seed};
  const auto records = load_records(data, c, cfg);
  std::vector<std::string> tags;
  for (const auto& r : records) tags.push_back(r.semester);
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  const FoldPlan plan = temporal_folds(chronological_semesters(tags), cfg.eval.fold_mode);

  std::vector<MethodSpec> specs;
  for (const auto& m : cfg.eval.methods) specs.push_back(method_spec(m, cfg));
  CVOptions opt;
  opt.seeds = cfg.eval.seeds;
  opt.jobs = cfg.eval.jobs;
  opt.train_experts_only = cfg.eval.train_experts_only;
  opt.test_experts_only = cfg.eval.test_experts_only;
  opt.quantizer = cfg.eval.quantizer;
  opt.action_count = cfg.synth.action_count;
  const auto reports = run_temporal_cv(records, specs, plan, opt);

  const fs::path csv = artifact(cfg, out);
  write_text(csv, reports_csv(reports));
  fs::path md = csv;
  md.replace_extension(".md");
  write_text(md, reports_markdown(reports));
  fs::path summary = csv;
  summary.replace_filename(csv.stem().string() + "_summary.csv");
  write_text(summary, summary_csv(reports));
  write_text(artifact(cfg, "run_config.json"), to_json(cfg).dump(1) + "\n");
  for (const auto& r : reports)
    for (const auto& f : r.folds)
      for (const auto& w : f.metrics.warnings)
        std::cerr << "warning: " << r.method << " seed " << r.seed << " test " << f.test_semester << ": " << w << "\n";
  std::cout << reports_markdown(reports);
  return 0;
}

int run_compare(const Common& c, const Overrides& ov, const std::vector<std::string>& files, const std::string& metric,
                double alpha, const std::string& out) {
  const RunConfig cfg = resolve_config(c, ov);
  std::vector<MetricReport> all;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error("cannot open " + f);
    try {
      auto part = parse_reports_csv(in);
      all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    } catch (const SchemaError& e) {
      throw SchemaError(f + ": " + e.what());
    }
  }
  const auto it = std::find(kMetricNames.begin(), kMetricNames.end(), metric);
  const auto rc = compare_reports(all, static_cast<std::size_t>(it - kMetricNames.begin()), alpha);
  const std::string json = rank_comparison_json(rc);
  const fs::path p = artifact(cfg, out);
  write_text(p, json + "\n");
  std::cout << json << "\n";
  return 0;
}

int run_export(const Common& c, const Overrides& ov, const std::string& model_path, const std::string& data,
               const std::string& out) {
  const RunConfig cfg = resolve_config(c, ov);
  std::ifstream in(model_path);
  if (!in) throw Error("cannot open " + model_path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ModelStateError(model_path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("model") || !doc.contains("standardization") || !doc.contains("method"))
    throw ModelStateError(model_path + ": not a trained model file");
  const std::string method = doc["method"].get<std::string>();
  if (method != "themes" && method != "themes0" && method != "themes1")
    throw ModelStateError("export needs a THEMES model; got " + method);
  const ThemesModel model = themes_model_from_json(doc["model"]);
  const Standardization stats = standardization_from_json(doc["standardization"]);
  const auto records = load_records(data, c, cfg);
  const Dataset ds = apply_standardization(to_dataset(records, cfg.synth.action_count), stats);
  const fs::path p = artifact(cfg, out);
  write_text(p, labeled_state_csv(model, ds));
  std::cout << "exported " << ds.total_steps() << " labeled steps to " << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline apprenticeship learning with time-aware hierarchical EM-EDM"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  common.jobs = default_jobs();
  Overrides ov;
  Hyper hyper;
  const RunConfig defaults;
  std::vector<std::string> method_choices = method_names();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and its ground truth");
  add_common(synth, common, ov);
  EmitterConfig ec = defaults.synth;
  std::string synth_out = "synth.jsonl", truth_out = "synth_truth.json";
  ov.add(synth, "--students", ec.students, "Students", [&ec](RunConfig& r) { r.synth.students = ec.students; })
      ->check(CLI::PositiveNumber);
  ov.add(synth, "--steps", ec.steps, "Steps per student", [&ec](RunConfig& r) { r.synth.steps = ec.steps; })
      ->check(CLI::PositiveNumber);
  ov.add(synth, "--dimension", ec.dimension, "State dimension", [&ec](RunConfig& r) { r.synth.dimension = ec.dimension; })
      ->check(CLI::PositiveNumber);
  ov.add(synth, "--regimes", ec.regimes, "Latent regimes", [&ec](RunConfig& r) { r.synth.regimes = ec.regimes; })
      ->check(CLI::PositiveNumber);
  ov.add(synth, "--intents", ec.intents, "Latent intents", [&ec](RunConfig& r) { r.synth.intents = ec.intents; })
      ->check(CLI::PositiveNumber);
  ov.add(synth, "--semesters", ec.semesters, "Semester tags assigned round-robin",
         [&ec](RunConfig& r) { r.synth.semesters = ec.semesters; })
      ->delimiter(',');
  synth->add_option("--out", synth_out, "Dataset file name")->capture_default_str();
  synth->add_option("--truth-out", truth_out, "Ground-truth file name")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate JSONL trajectory files");
  add_common(ingest, common, ov);
  std::vector<std::string> ingest_files;
  ingest->add_option("files", ingest_files, "JSONL files")->required()->check(CLI::ExistingFile);

  // filter-experts
  auto* filter = app.add_subcommand("filter-experts", "Keep high quantized-learning-gain students");
  add_common(filter, common, ov);
  std::string filter_data, filter_out = "experts.jsonl";
  double low_cut = 100.0 / 3.0, medium_cut = 200.0 / 3.0;
  filter->add_option("--data", filter_data, "Input JSONL (default: synthesize from the config)")->check(CLI::ExistingFile);
  ov.add(filter, "--low-cut", low_cut, "Upper bound of the low group (default: pre-test tertiles)",
         [&](RunConfig& r) { r.eval.quantizer = Quantizer{low_cut, r.eval.quantizer ? r.eval.quantizer->medium_upper : medium_cut}; });
  ov.add(filter, "--medium-cut", medium_cut, "Upper bound of the medium group (default: pre-test tertiles)",
         [&](RunConfig& r) { r.eval.quantizer = Quantizer{r.eval.quantizer ? r.eval.quantizer->low_upper : low_cut, medium_cut}; });
  filter->add_option("--out", filter_out, "Output file name")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Fit one method and write its model file");
  add_common(train, common, ov);
  add_hyper(train, hyper, ov);
  std::string train_method_name, train_data, train_out;
  std::vector<std::string> train_semesters;
  bool all_students = false;
  train->add_option("--method", train_method_name, "Method")->required()->check(CLI::IsMember(method_choices));
  train->add_option("--data", train_data, "Training JSONL (default: synthesize from the config)")->check(CLI::ExistingFile);
  train->add_option("--semesters", train_semesters, "Restrict training to these semesters")->delimiter(',');
  ov.add_flag(train, "--all-students", all_students, "Train on every student, not only experts",
              [](RunConfig& r) { r.eval.train_experts_only = false; });
  train->add_option("--out", train_out, "Model file name (default: model_<method>.json)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Temporal cross-validation over selected methods");
  add_common(evaluate, common, ov);
  add_hyper(evaluate, hyper, ov);
  std::vector<std::string> eval_methods = defaults.eval.methods;
  std::vector<uint64_t> eval_seeds = defaults.eval.seeds;
  std::string eval_data, eval_out = "report.csv", folds = fold_mode_name(defaults.eval.fold_mode);
  bool eval_all = false;
  ov.add(evaluate, "--methods", eval_methods, "Comma-separated methods",
         [&](RunConfig& r) { r.eval.methods = eval_methods; })
      ->delimiter(',')
      ->check(CLI::IsMember(method_choices));
  evaluate->add_option("--data", eval_data, "JSONL corpus (default: synthesize from the config)")->check(CLI::ExistingFile);
  ov.add(evaluate, "--folds", folds, "Fold plan", [&](RunConfig& r) { r.eval.fold_mode = parse_fold_mode(folds); })
      ->check(CLI::IsMember({"cumulative", "temporal", "per-pair"}));
  CLI::Option* seeds_opt = ov.add(evaluate, "--seeds", eval_seeds, "Comma-separated seeds (default: --seed)",
                                  [&](RunConfig& r) { r.eval.seeds = eval_seeds; });
  seeds_opt->delimiter(',');
  ov.add_flag(evaluate, "--all-students", eval_all, "Train and test on every student, not only experts",
              [](RunConfig& r) {
                r.eval.train_experts_only = false;
                r.eval.test_experts_only = false;
              });
  evaluate->add_option("--out", eval_out, "Report CSV file name; Markdown and per-method summary files are written beside it")
      ->capture_default_str();

  // compare
  auto* compare = app.add_subcommand("compare", "Friedman/Conover ranking over existing reports");
  add_common(compare, common, ov);
  std::vector<std::string> compare_files;
  std::string metric = "Accuracy", compare_out = "comparison.json";
  double alpha = defaults.eval.alpha;
  compare->add_option("reports", compare_files, "Report CSV files")->required()->check(CLI::ExistingFile);
  compare->add_option("--metric", metric, "Metric column")
      ->capture_default_str()
      ->check(CLI::IsMember(std::vector<std::string>(kMetricNames.begin(), kMetricNames.end())));
  ov.add(compare, "--alpha", alpha, "Significance level", [&](RunConfig& r) { r.eval.alpha = alpha; })
      ->check(CLI::Range(0.0, 1.0));
  compare->add_option("--out", compare_out, "Output file name")->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "Labeled-state CSV from a THEMES model");
  add_common(exp, common, ov);
  std::string model_path, export_data, export_out = "labeled_states.csv";
  exp->add_option("--model", model_path, "Model file written by train")->required()->check(CLI::ExistingFile);
  exp->add_option("--data", export_data, "JSONL corpus (default: synthesize from the config)")->check(CLI::ExistingFile);
  exp->add_option("--out", export_out, "Output file name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return run_synth(common, ov, synth_out, truth_out);
    if (*ingest) return run_ingest(common, ov, ingest_files);
    if (*filter) return run_filter(common, ov, filter_data, filter_out);
    if (*train) return run_train(common, ov, train_method_name, train_data, train_semesters, train_out);
    if (*evaluate) {
      // A bare --seed selects the evaluation seed unless --seeds is given.
      const bool seed_only = seeds_opt->count() == 0 && evaluate->get_option("--seed")->count() > 0;
      return run_evaluate(common, ov, eval_data, eval_out, seed_only);
    }
    if (*compare) return run_compare(common, ov, compare_files, metric, alpha, compare_out);
    if (*exp) return run_export(common, ov, model_path, export_data, export_out);
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
