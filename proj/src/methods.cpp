#include "evolal/methods.hpp"

#include "evolal/baselines.hpp"
#include "evolal/edm.hpp"
#include "evolal/emedm.hpp"
#include "evolal/error.hpp"
#include "evolal/themes.hpp"

#include <memory>

namespace evolal {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"bc", "gp-dqn", "edm", "em-edm", "themes0", "themes1", "themes"};
  return names;
}

namespace {

std::vector<Sample> all_steps(const Dataset& d) {
  std::vector<Sample> out;
  for (const auto& t : d.trajectories)
    for (const auto& s : t.steps) out.push_back(Sample{s.state, s.action, 1.0});
  return out;
}

Demonstration as_demo(const Trajectory& t, int upto) {
  Demonstration d{t.id, {}};
  for (int i = 0; i <= upto && i < t.length(); ++i)
    d.steps.push_back(Sample{t.steps[static_cast<std::size_t>(i)].state, t.steps[static_cast<std::size_t>(i)].action, 1.0});
  return d;
}

const Vector& state_at(const Trajectory& t, int i) {
  if (i < 0 || i >= t.length()) throw IndexError("step index out of range");
  return t.steps[static_cast<std::size_t>(i)].state;
}

TrainedMethod net_method(std::string name, PolicyNet net) {
  auto shared = std::make_shared<const PolicyNet>(std::move(net));
  return TrainedMethod{std::move(name), [shared](const Trajectory& t, int i) { return policy_probs(*shared, state_at(t, i)); },
                       [shared] { return Json{{"policy", to_json(*shared)}}; }};
}

}  // namespace

TrainedMethod train_method(const std::string& name, const Dataset& train, const RunConfig& cfg, uint64_t seed) {
  const int A = train.action_count;
  if (name == "bc") {
    TrainConfig tc = cfg.bc;
    tc.seed = seed;
    return net_method(name, train_bc(all_steps(train), A, tc, cfg.bc_loss).net);
  }
  if (name == "edm") {
    EDMConfig ec = cfg.edm();
    ec.train.seed = seed;
    return net_method(name, train_edm(all_steps(train), A, ec).net);
  }
  if (name == "em-edm") {
    EMConfig em = cfg.themes.em;
    em.seed = seed;
    std::vector<Demonstration> demos;
    for (const auto& t : train.trajectories) demos.push_back(as_demo(t, t.length() - 1));
    auto model = std::make_shared<const MixtureModel>(fit_mixture(demos, A, em));
    return TrainedMethod{name,
                         [model](const Trajectory& t, int i) {
                           state_at(t, i);
                           return predict_stepwise(*model, as_demo(t, i), i);
                         },
                         [model] { return Json{{"mixture", to_json(*model)}}; }};
  }
  if (name == "gp-dqn") {
    std::vector<double> returns;
    for (const auto& t : train.trajectories) {
      if (!t.scores) throw DegenerateInputError("trajectory '" + t.id + "' has no test scores for its delayed return");
      returns.push_back(normalized_learning_gain(t.scores->pre, t.scores->post));
    }
    const auto rewards = gp_redistribute(train.trajectories, returns, cfg.gp);
    DQNConfig dc = cfg.dqn;
    dc.train.seed = seed;
    auto q = std::make_shared<const PolicyNet>(train_dqn(train.trajectories, rewards, A, dc).q);
    return TrainedMethod{name, [q](const Trajectory& t, int i) { return dqn_probs(*q, state_at(t, i)); },
                         [q] { return Json{{"q_network", to_json(*q)}}; }};
  }
  if (name == "themes" || name == "themes1" || name == "themes0") {
    ThemesConfig tc = cfg.themes;
    tc.partition.seed = seed;
    tc.em.seed = seed;
    auto model = std::make_shared<const ThemesModel>(fit_themes(train, tc, parse_variant(name)));
    return TrainedMethod{name, [model](const Trajectory& t, int i) { return predict_themes(*model, t, i); },
                         [model] { return to_json(*model); }};
  }
  throw ConfigError("unknown method '" + name + "'");
}

MethodSpec method_spec(const std::string& name, const RunConfig& cfg) {
  const auto& known = method_names();
  if (std::find(known.begin(), known.end(), name) == known.end()) throw ConfigError("unknown method '" + name + "'");
  return MethodSpec{name, [name, cfg](const Dataset& train, uint64_t seed) {
                      return train_method(name, train, cfg, seed).predict;
                    }};
}

}  // namespace evolal
