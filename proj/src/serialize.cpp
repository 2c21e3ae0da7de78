#include "evolal/serialize.hpp"

#include "evolal/error.hpp"

#include <set>

namespace evolal {

namespace {

// Strict object reader: every key must be consumed before finish().
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("wrong type for '" + child(key) + "'");
    }
  }

  void get_optional(const char* key, std::optional<double>& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    if (it->is_null()) {
      out.reset();
    } else if (it->is_number()) {
      out = it->get<double>();
    } else {
      throw ConfigError("wrong type for '" + child(key) + "'");
    }
  }

  const Json* section(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError("unknown key '" + child(k) + "'");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Model documents are trusted less strictly: missing or mistyped fields are
// reported as model-state errors.
template <class T>
T field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelStateError(std::string("bad model field '") + key + "': " + e.what());
  }
}

const Json& node(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ModelStateError(std::string("missing model field '") + key + "'");
  return *it;
}

}  // namespace

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ModelStateError("vector must be an array");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = field<Eigen::Index>(j, "rows");
  const auto cols = field<Eigen::Index>(j, "cols");
  const auto data = field<std::vector<double>>(j, "data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ModelStateError("matrix data does not match its shape");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

// ---- configs ----

Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"epochs", c.epochs},       {"batch_size", c.batch_size},
              {"weight_decay", c.weight_decay},   {"hidden", c.hidden}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("learning_rate", c.learning_rate);
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("weight_decay", c.weight_decay);
  r.get("hidden", c.hidden);
  r.finish();
  return c;
}

Json to_json(const EDMConfig& c) {
  return Json{{"energy_weight", c.energy_weight}, {"langevin_steps", c.langevin_steps},
              {"langevin_step", c.langevin_step}, {"langevin_noise", c.langevin_noise},
              {"buffer_size", c.buffer_size},     {"reinit_prob", c.reinit_prob},
              {"energy_reg", c.energy_reg},       {"train", to_json(c.train)}};
}

EDMConfig edm_config_from_json(const Json& j, EDMConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("energy_weight", c.energy_weight);
  r.get("langevin_steps", c.langevin_steps);
  r.get("langevin_step", c.langevin_step);
  r.get("langevin_noise", c.langevin_noise);
  r.get("buffer_size", c.buffer_size);
  r.get("reinit_prob", c.reinit_prob);
  r.get("energy_reg", c.energy_reg);
  if (const Json* t = r.section("train")) c.train = train_config_from_json(*t, c.train, r.child("train"));
  r.finish();
  return c;
}

Json to_json(const EMConfig& c) {
  return Json{{"clusters", c.clusters}, {"tol", c.tol}, {"max_iter", c.max_iter}, {"mstep_epochs", c.mstep_epochs}};
}

EMConfig em_config_from_json(const Json& j, EMConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("clusters", c.clusters);
  r.get("tol", c.tol);
  r.get("max_iter", c.max_iter);
  r.get("mstep_epochs", c.mstep_epochs);
  r.finish();
  return c;
}

Json to_json(const IRLConfig& c) {
  return Json{{"beta", c.beta},           {"steps", c.steps},         {"learning_rate", c.learning_rate},
              {"fd_step", c.fd_step},     {"inner_tol", c.inner_tol}, {"max_halvings", c.max_halvings}};
}

IRLConfig irl_config_from_json(const Json& j, IRLConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("beta", c.beta);
  r.get("steps", c.steps);
  r.get("learning_rate", c.learning_rate);
  r.get("fd_step", c.fd_step);
  r.get("inner_tol", c.inner_tol);
  r.get("max_halvings", c.max_halvings);
  r.finish();
  return c;
}

Json to_json(const PartitionConfig& c) {
  return Json{{"clusters", c.clusters},
              {"window", c.window},
              {"sparsity", c.sparsity},
              {"consistency", c.consistency},
              {"decay_tau", c.decay_tau ? Json(*c.decay_tau) : Json(nullptr)},
              {"reward_strength", c.reward_strength},
              {"max_sweeps", c.max_sweeps},
              {"admm_tol", c.admm_tol},
              {"kmeans_iterations", c.kmeans_iterations}};
}

PartitionConfig partition_config_from_json(const Json& j, PartitionConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("clusters", c.clusters);
  r.get("window", c.window);
  r.get("sparsity", c.sparsity);
  r.get("consistency", c.consistency);
  r.get_optional("decay_tau", c.decay_tau);
  r.get("reward_strength", c.reward_strength);
  r.get("max_sweeps", c.max_sweeps);
  r.get("admm_tol", c.admm_tol);
  r.get("kmeans_iterations", c.kmeans_iterations);
  r.finish();
  return c;
}

Json to_json(const ThemesConfig& c) {
  return Json{{"gamma", c.gamma},
              {"outer_iterations", c.outer_iterations},
              {"change_tol", c.change_tol},
              {"min_run", c.min_run},
              {"partition", to_json(c.partition)},
              {"em", to_json(c.em)},
              {"edm", to_json(c.em.edm)},
              {"irl", to_json(c.irl)}};
}

ThemesConfig themes_config_from_json(const Json& j, ThemesConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("gamma", c.gamma);
  r.get("outer_iterations", c.outer_iterations);
  r.get("change_tol", c.change_tol);
  r.get("min_run", c.min_run);
  if (const Json* s = r.section("partition")) c.partition = partition_config_from_json(*s, c.partition, r.child("partition"));
  if (const Json* s = r.section("em")) {
    const EDMConfig keep = c.em.edm;
    c.em = em_config_from_json(*s, c.em, r.child("em"));
    c.em.edm = keep;
  }
  if (const Json* s = r.section("edm")) c.em.edm = edm_config_from_json(*s, c.em.edm, r.child("edm"));
  if (const Json* s = r.section("irl")) c.irl = irl_config_from_json(*s, c.irl, r.child("irl"));
  r.finish();
  return c;
}

Json to_json(const GPConfig& c) {
  return Json{{"length_scale", c.length_scale}, {"signal_variance", c.signal_variance},
              {"noise_variance", c.noise_variance}};
}

GPConfig gp_config_from_json(const Json& j, GPConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("length_scale", c.length_scale);
  r.get("signal_variance", c.signal_variance);
  r.get("noise_variance", c.noise_variance);
  r.finish();
  return c;
}

Json to_json(const DQNConfig& c) {
  return Json{{"gamma", c.gamma}, {"target_sync", c.target_sync}, {"train", to_json(c.train)}};
}

DQNConfig dqn_config_from_json(const Json& j, DQNConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("gamma", c.gamma);
  r.get("target_sync", c.target_sync);
  if (const Json* t = r.section("train")) c.train = train_config_from_json(*t, c.train, r.child("train"));
  r.finish();
  return c;
}

Json to_json(const EmitterConfig& c) {
  Json tables = Json::array();
  for (const auto& m : c.action_table) tables.push_back(to_json(m));
  return Json{{"students", c.students},
              {"steps", c.steps},
              {"dimension", c.dimension},
              {"regimes", c.regimes},
              {"intents", c.intents},
              {"action_count", c.action_count},
              {"separation", c.separation},
              {"ar_coefficient", c.ar_coefficient},
              {"regime_change_points", c.regime_change_points},
              {"regime_switch_prob", c.regime_switch_prob},
              {"intent_change_points", c.intent_change_points},
              {"intent_switch_prob", c.intent_switch_prob},
              {"intent_prior", c.intent_prior},
              {"action_table", tables},
              {"action_fidelity", c.action_fidelity},
              {"time_step", c.time_step},
              {"semesters", c.semesters}};
}

EmitterConfig emitter_config_from_json(const Json& j, EmitterConfig c, const std::string& path) {
  Reader r(j, path);
  r.get("students", c.students);
  r.get("steps", c.steps);
  r.get("dimension", c.dimension);
  r.get("regimes", c.regimes);
  r.get("intents", c.intents);
  r.get("action_count", c.action_count);
  r.get("separation", c.separation);
  r.get("ar_coefficient", c.ar_coefficient);
  r.get("regime_change_points", c.regime_change_points);
  r.get("regime_switch_prob", c.regime_switch_prob);
  r.get("intent_change_points", c.intent_change_points);
  r.get("intent_switch_prob", c.intent_switch_prob);
  r.get("intent_prior", c.intent_prior);
  if (const Json* t = r.section("action_table")) {
    if (!t->is_array()) throw ConfigError("'" + r.child("action_table") + "' must be an array");
    c.action_table.clear();
    try {
      for (const auto& m : *t) c.action_table.push_back(matrix_from_json(m));
    } catch (const ModelStateError& e) {
      throw ConfigError("bad matrix in '" + r.child("action_table") + "': " + e.what());
    }
  }
  r.get("action_fidelity", c.action_fidelity);
  r.get("time_step", c.time_step);
  r.get("semesters", c.semesters);
  r.finish();
  return c;
}

// ---- models ----

Json to_json(const PolicyNet& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers) layers.push_back(Json{{"weight", to_json(l.weight)}, {"bias", to_json(l.bias)}});
  return Json{{"layers", layers}};
}

PolicyNet policy_net_from_json(const Json& j) {
  PolicyNet net;
  const Json& layers = node(j, "layers");
  if (!layers.is_array() || layers.empty()) throw ModelStateError("network has no layers");
  for (const auto& l : layers) {
    Layer layer{matrix_from_json(node(l, "weight")), vector_from_json(node(l, "bias"))};
    if (layer.bias.size() != layer.weight.rows()) throw ModelStateError("layer bias does not match its weight");
    if (!net.layers.empty() && net.layers.back().weight.rows() != layer.weight.cols())
      throw ModelStateError("consecutive layers do not chain");
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Json to_json(const Standardization& s) { return Json{{"mean", to_json(s.mean)}, {"stddev", to_json(s.stddev)}}; }

Standardization standardization_from_json(const Json& j) {
  Standardization s{vector_from_json(node(j, "mean")), vector_from_json(node(j, "stddev"))};
  if (s.mean.size() != s.stddev.size()) throw ModelStateError("standardization vectors differ in length");
  return s;
}

Json to_json(const PartitionModel& m) {
  Json profiles = Json::array();
  for (const auto& p : m.profiles) profiles.push_back(Json{{"mean", to_json(p.mean)}, {"precision", to_json(p.precision)}});
  return Json{{"config", to_json(m.config)},
              {"seed", m.config.seed},
              {"state_dimension", m.state_dimension},
              {"tau", m.tau},
              {"profiles", profiles},
              {"trajectory_ids", m.trajectory_ids},
              {"window_labels", m.window_labels},
              {"converged", m.converged},
              {"objective", m.objective},
              {"objective_trace", m.objective_trace},
              {"sweeps", m.sweeps}};
}

PartitionModel partition_model_from_json(const Json& j) {
  PartitionModel m;
  try {
    m.config = partition_config_from_json(node(j, "config"), {}, "config");
  } catch (const ConfigError& e) {
    throw ModelStateError(e.what());
  }
  m.config.seed = field<uint64_t>(j, "seed");
  m.state_dimension = field<int>(j, "state_dimension");
  m.tau = field<double>(j, "tau");
  for (const auto& p : node(j, "profiles")) {
    ClusterProfile cp{vector_from_json(node(p, "mean")), matrix_from_json(node(p, "precision"))};
    if (cp.precision.rows() != cp.mean.size() || cp.precision.cols() != cp.mean.size())
      throw ModelStateError("profile mean and precision disagree");
    m.profiles.push_back(std::move(cp));
  }
  m.trajectory_ids = field<std::vector<std::string>>(j, "trajectory_ids");
  m.window_labels = field<std::vector<std::vector<int>>>(j, "window_labels");
  m.converged = field<bool>(j, "converged");
  m.objective = field<double>(j, "objective");
  m.objective_trace = field<std::vector<double>>(j, "objective_trace");
  m.sweeps = field<int>(j, "sweeps");
  return m;
}

Json to_json(const MixtureModel& m) {
  Json policies = Json::array();
  for (const auto& p : m.policies) policies.push_back(to_json(p));
  return Json{{"action_count", m.action_count},
              {"priors", m.priors},
              {"policies", policies},
              {"responsibilities", to_json(m.responsibilities)},
              {"log_likelihood", m.log_likelihood},
              {"likelihood_trace", m.likelihood_trace},
              {"iterations", m.iterations},
              {"termination", termination_name(m.reason)}};
}

MixtureModel mixture_model_from_json(const Json& j) {
  MixtureModel m;
  m.action_count = field<int>(j, "action_count");
  m.priors = field<std::vector<double>>(j, "priors");
  for (const auto& p : node(j, "policies")) m.policies.push_back(policy_net_from_json(p));
  if (m.priors.size() != m.policies.size()) throw ModelStateError("mixture priors do not match its policies");
  m.responsibilities = matrix_from_json(node(j, "responsibilities"));
  m.log_likelihood = field<double>(j, "log_likelihood");
  m.likelihood_trace = field<std::vector<double>>(j, "likelihood_trace");
  m.iterations = field<int>(j, "iterations");
  const auto reason = field<std::string>(j, "termination");
  if (reason == "converged") {
    m.reason = Termination::kConverged;
  } else if (reason == "empty-cluster") {
    m.reason = Termination::kEmptyCluster;
  } else if (reason == "max-iter") {
    m.reason = Termination::kMaxIter;
  } else {
    throw ModelStateError("unknown termination '" + reason + "'");
  }
  return m;
}

Json to_json(const RewardRegulator& r) {
  return Json{{"reward", to_json(r.reward)},
              {"beta", r.beta},
              {"log_likelihood", r.log_likelihood},
              {"likelihood_trace", r.likelihood_trace}};
}

RewardRegulator regulator_from_json(const Json& j) {
  RewardRegulator r;
  r.reward = matrix_from_json(node(j, "reward"));
  r.beta = field<double>(j, "beta");
  r.log_likelihood = field<double>(j, "log_likelihood");
  r.likelihood_trace = field<std::vector<double>>(j, "likelihood_trace");
  return r;
}

Json to_json(const ThemesModel& m) {
  Json segments = Json::array();
  for (const auto& s : m.segments)
    segments.push_back(Json{{"owner", s.owner}, {"start", s.start}, {"end", s.end}, {"label", s.label}});
  Json log = Json::array();
  for (const auto& e : m.log)
    log.push_back(Json{{"partition_objective", e.partition_objective},
                       {"em_log_likelihood", e.em_log_likelihood},
                       {"irl_log_likelihood", e.irl_log_likelihood},
                       {"label_change", e.label_change},
                       {"responsibility_change", e.responsibility_change}});
  return Json{{"variant", variant_name(m.variant)},
              {"config", to_json(m.config)},
              {"em_seed", m.config.em.seed},
              {"partition", to_json(m.partition)},
              {"mixture", to_json(m.mixture)},
              {"regulator", to_json(m.regulator)},
              {"segments", segments},
              {"log", log},
              {"iterations", m.iterations},
              {"converged", m.converged}};
}

ThemesModel themes_model_from_json(const Json& j) {
  ThemesModel m;
  try {
    m.variant = parse_variant(field<std::string>(j, "variant"));
    m.config = themes_config_from_json(node(j, "config"), {}, "config");
  } catch (const ConfigError& e) {
    throw ModelStateError(e.what());
  }
  m.partition = partition_model_from_json(node(j, "partition"));
  m.config.partition.seed = m.partition.config.seed;
  m.config.em.seed = field<uint64_t>(j, "em_seed");
  m.mixture = mixture_model_from_json(node(j, "mixture"));
  m.regulator = regulator_from_json(node(j, "regulator"));
  for (const auto& s : node(j, "segments"))
    m.segments.push_back(SubTrajectory{field<std::string>(s, "owner"), field<int>(s, "start"), field<int>(s, "end"),
                                       field<int>(s, "label")});
  for (const auto& e : node(j, "log"))
    m.log.push_back(IterationLog{field<double>(e, "partition_objective"), field<double>(e, "em_log_likelihood"),
                                 field<double>(e, "irl_log_likelihood"), field<double>(e, "label_change"),
                                 field<double>(e, "responsibility_change")});
  m.iterations = field<int>(j, "iterations");
  m.converged = field<bool>(j, "converged");
  m.check_consistency();
  return m;
}

}  // namespace evolal
