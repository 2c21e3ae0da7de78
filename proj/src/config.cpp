#include "evolal/config.hpp"

#include "evolal/error.hpp"
#include "evolal/methods.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace evolal {

std::string fold_mode_name(FoldMode m) { return m == FoldMode::kCumulative ? "cumulative" : "per-pair"; }

FoldMode parse_fold_mode(const std::string& name) {
  if (name == "cumulative" || name == "temporal") return FoldMode::kCumulative;
  if (name == "per-pair") return FoldMode::kPerPair;
  throw ConfigError("unknown fold mode '" + name + "'");
}

void RunConfig::validate() const {
  themes.validate();
  bc.validate();
  gp.validate();
  dqn.validate();
  synth.validate();
  if (output_dir.empty()) throw ConfigError("output directory must be set");
  if (eval.methods.empty()) throw ConfigError("at least one method is required");
  const auto& known = method_names();
  for (const auto& m : eval.methods)
    if (std::find(known.begin(), known.end(), m) == known.end()) throw ConfigError("unknown method '" + m + "'");
  if (std::set<std::string>(eval.methods.begin(), eval.methods.end()).size() != eval.methods.size())
    throw ConfigError("methods must be distinct");
  if (eval.seeds.empty()) throw ConfigError("at least one evaluation seed is required");
  if (eval.jobs < 1) throw ConfigError("jobs must be positive");
  if (eval.quantizer) eval.quantizer->validate();
  if (!(eval.alpha > 0.0 && eval.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

Json to_json(const RunConfig& c) {
  Json eval{{"methods", c.eval.methods},
            {"seeds", c.eval.seeds},
            {"jobs", c.eval.jobs},
            {"fold_mode", fold_mode_name(c.eval.fold_mode)},
            {"train_experts_only", c.eval.train_experts_only},
            {"test_experts_only", c.eval.test_experts_only},
            {"quantizer", c.eval.quantizer ? Json{{"low_upper", c.eval.quantizer->low_upper},
                                                  {"medium_upper", c.eval.quantizer->medium_upper}}
                                           : Json(nullptr)},
            {"alpha", c.eval.alpha}};
  return Json{{"seed", c.seed},
              {"output_dir", c.output_dir},
              {"themes", to_json(c.themes)},
              {"bc", to_json(c.bc)},
              {"bc_loss", c.bc_loss == DataLoss::kSquared ? "squared" : "cross-entropy"},
              {"gp", to_json(c.gp)},
              {"dqn", to_json(c.dqn)},
              {"eval", eval},
              {"synth", to_json(c.synth)}};
}

namespace {

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& path) {
  try {
    out = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong type for '" + path + key + "'");
  }
}

EvalConfig eval_from_json(const Json& j, EvalConfig c) {
  if (!j.is_object()) throw ConfigError("'eval' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "methods") {
      read(v, "methods", c.methods, "eval.");
    } else if (k == "seeds") {
      read(v, "seeds", c.seeds, "eval.");
    } else if (k == "jobs") {
      read(v, "jobs", c.jobs, "eval.");
    } else if (k == "fold_mode") {
      std::string s;
      read(v, "fold_mode", s, "eval.");
      c.fold_mode = parse_fold_mode(s);
    } else if (k == "train_experts_only") {
      read(v, "train_experts_only", c.train_experts_only, "eval.");
    } else if (k == "test_experts_only") {
      read(v, "test_experts_only", c.test_experts_only, "eval.");
    } else if (k == "alpha") {
      read(v, "alpha", c.alpha, "eval.");
    } else if (k == "quantizer") {
      if (v.is_null()) {
        c.quantizer.reset();
        continue;
      }
      if (!v.is_object()) throw ConfigError("'eval.quantizer' must be an object or null");
      Quantizer q;
      for (const auto& [qk, qv] : v.items()) {
        if (qk == "low_upper") {
          read(qv, "low_upper", q.low_upper, "eval.quantizer.");
        } else if (qk == "medium_upper") {
          read(qv, "medium_upper", q.medium_upper, "eval.quantizer.");
        } else {
          throw ConfigError("unknown key 'eval.quantizer." + qk + "'");
        }
      }
      c.quantizer = q;
    } else {
      throw ConfigError("unknown key 'eval." + k + "'");
    }
  }
  return c;
}

}  // namespace

RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "seed") {
      read(v, "seed", c.seed, "");
    } else if (k == "output_dir") {
      read(v, "output_dir", c.output_dir, "");
    } else if (k == "themes") {
      c.themes = themes_config_from_json(v, c.themes, "themes");
    } else if (k == "bc") {
      c.bc = train_config_from_json(v, c.bc, "bc");
    } else if (k == "bc_loss") {
      std::string s;
      read(v, "bc_loss", s, "");
      if (s == "squared") {
        c.bc_loss = DataLoss::kSquared;
      } else if (s == "cross-entropy") {
        c.bc_loss = DataLoss::kCrossEntropy;
      } else {
        throw ConfigError("unknown BC loss '" + s + "'");
      }
    } else if (k == "gp") {
      c.gp = gp_config_from_json(v, c.gp, "gp");
    } else if (k == "dqn") {
      c.dqn = dqn_config_from_json(v, c.dqn, "dqn");
    } else if (k == "eval") {
      c.eval = eval_from_json(v, c.eval);
    } else if (k == "synth") {
      c.synth = emitter_config_from_json(v, c.synth, "synth");
    } else {
      throw ConfigError("unknown key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace evolal
