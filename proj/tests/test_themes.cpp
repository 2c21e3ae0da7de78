#include "evolal/error.hpp"
#include "evolal/serialize.hpp"
#include "evolal/synth.hpp"
#include "evolal/themes.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace evolal;

namespace {

Dataset small_corpus(uint64_t seed) {
  EmitterConfig ec;
  ec.students = 12;
  ec.steps = 10;
  ec.dimension = 4;
  ec.regimes = 2;
  ec.intents = 2;
  ec.regime_change_points = {5};
  ec.intent_change_points = {5};
  ec.intent_switch_prob = 0.5;
  ec.seed = seed;
  return standardize(gen_emitter(ec).dataset()).first;
}

ThemesConfig small_config() {
  ThemesConfig cfg;
  cfg.partition.clusters = 2;
  cfg.em.clusters = 2;
  cfg.em.max_iter = 5;
  cfg.em.mstep_epochs = 4;
  cfg.em.edm.train.epochs = 8;
  cfg.em.edm.train.hidden = {8};
  cfg.em.edm.langevin_steps = 3;
  cfg.irl.steps = 20;
  cfg.outer_iterations = 3;
  return cfg;
}

Json without_variant(const ThemesModel& m) {
  Json j = to_json(m);
  j.erase("variant");
  return j;
}

}  // namespace

TEST_CASE("cutting constant runs") {
  const auto t3 = testing_util::make_trajectory("a", {{0.0}, {0.0}, {0.0}});
  CHECK(cut_subtrajectories(t3, std::vector<int>{1, 1, 1}).size() == 1);

  const auto t5 = testing_util::make_trajectory("b", {{0.0}, {0.0}, {0.0}, {0.0}, {0.0}});
  const auto subs = cut_subtrajectories(t5, std::vector<int>{2, 2, 6, 6, 1});
  REQUIRE(subs.size() == 3);
  CHECK(subs[0].start == 0);
  CHECK(subs[0].end == 1);
  CHECK(subs[1].start == 2);
  CHECK(subs[1].end == 3);
  CHECK(subs[1].label == 6);
  CHECK(subs[2].start == 4);
  CHECK(subs[2].end == 4);
  CHECK(subs[2].samples(t5).size() == 1);

  const auto t6 = testing_util::make_trajectory("c", {{0.0}, {0.0}, {0.0}, {0.0}, {0.0}, {0.0}});
  CHECK(cut_subtrajectories(t6, std::vector<int>{2, 6, 1, 2, 6, 3}).size() == 6);
  CHECK_THROWS_AS(cut_subtrajectories(t6, std::vector<int>{1}), LengthError);
}

TEST_CASE("short runs merge into the better neighbor") {
  std::vector<int> labels{0, 0, 1, 2, 2};
  Matrix ll = Matrix::Zero(5, 3);
  ll(2, 2) = 1.0;  // the lone step fits label 2 better than label 0
  merge_short_runs(labels, ll, 2);
  CHECK(labels == std::vector<int>{0, 0, 2, 2, 2});

  std::vector<int> edge{1, 0, 0, 0};
  merge_short_runs(edge, Matrix::Zero(4, 2), 2);
  CHECK(edge == std::vector<int>{0, 0, 0, 0});

  std::vector<int> lone{3};
  merge_short_runs(lone, Matrix::Zero(1, 4), 2);
  CHECK(lone == std::vector<int>{3});
}

TEST_CASE("fitted model is consistent and within the iteration cap") {
  const auto data = small_corpus(1);
  const auto m = fit_themes(data, small_config(), Variant::kThemes);
  CHECK_NOTHROW(m.check_consistency());
  CHECK(m.iterations >= 1);
  CHECK(m.iterations <= 3);
  CHECK(m.log.size() == static_cast<std::size_t>(m.iterations));
  // Segments tile every trajectory.
  std::size_t covered = 0;
  for (const auto& s : m.segments) {
    CHECK(s.length() >= 1);
    covered += static_cast<std::size_t>(s.length());
  }
  CHECK(covered == data.total_steps());
  for (std::size_t i = 1; i < m.mixture.likelihood_trace.size(); ++i)
    CHECK(m.mixture.likelihood_trace[i] >= m.mixture.likelihood_trace[i - 1] - 1e-6);
}

TEST_CASE("ablation identities") {
  const auto data = small_corpus(2);
  ThemesConfig cfg = small_config();
  const auto t1 = fit_themes(data, cfg, Variant::kThemes1);
  CHECK(t1.iterations == 1);
  ThemesConfig off = cfg;
  off.partition.reward_strength = 0.0;
  const auto t_off = fit_themes(data, off, Variant::kThemes);
  ThemesConfig t1_off = cfg;
  t1_off.partition.reward_strength = 0.0;
  CHECK(without_variant(t_off).dump() == without_variant(fit_themes(data, t1_off, Variant::kThemes1)).dump());

  ThemesConfig one = cfg;
  one.em.clusters = 1;
  CHECK(without_variant(fit_themes(data, one, Variant::kThemes1)).dump() ==
        without_variant(fit_themes(data, one, Variant::kThemes0)).dump());
}

TEST_CASE("prediction is causal and starts from the prior") {
  const auto data = small_corpus(3);
  const auto m = fit_themes(data, small_config(), Variant::kThemes1);
  const auto& traj = data.trajectories[0];
  const Vector p0 = predict_themes(m, traj, 0);
  Vector expect = Vector::Zero(3);
  for (int o = 0; o < m.mixture.clusters(); ++o)
    expect += m.mixture.priors[static_cast<std::size_t>(o)] * policy_probs(m.mixture.policies[static_cast<std::size_t>(o)], traj.steps[0].state);
  CHECK((p0 - expect).norm() < 1e-12);

  const Vector p4 = predict_themes(m, traj, 4);
  auto edited = traj;
  for (int t = 5; t < edited.length(); ++t) {
    edited.steps[static_cast<std::size_t>(t)].state *= -2.0;
    edited.steps[static_cast<std::size_t>(t)].action = (edited.steps[static_cast<std::size_t>(t)].action + 1) % 3;
  }
  edited.steps[4].action = (edited.steps[4].action + 1) % 3;  // the action at t is not observed either
  CHECK(predict_themes(m, edited, 4) == p4);
  CHECK(p4.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(predict_themes(m, traj, traj.length()), IndexError);
}

TEST_CASE("one partition label reduces to step-wise mixture prediction") {
  const auto data = small_corpus(4);
  ThemesConfig cfg = small_config();
  cfg.partition.clusters = 1;
  const auto m = fit_themes(data, cfg, Variant::kThemes1);
  const auto& traj = data.trajectories[1];
  Demonstration demo{traj.id, {}};
  for (const auto& s : traj.steps) demo.steps.push_back(Sample{s.state, s.action, 1.0});
  for (int t = 0; t < traj.length(); ++t)
    CHECK((predict_themes(m, traj, t) - predict_stepwise(m.mixture, demo, t)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("model JSON round-trips and the labeled-state export has one row per step") {
  const auto data = small_corpus(5);
  const auto m = fit_themes(data, small_config(), Variant::kThemes);
  const Json j = to_json(m);
  const auto back = themes_model_from_json(Json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
  CHECK(predict_themes(back, data.trajectories[0], 3) == predict_themes(m, data.trajectories[0], 3));

  const auto csv = labeled_state_csv(m, data);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == data.total_steps() + 1);
  CHECK(csv.rfind("id,step,x0,x1,x2,x3,label,p0,p1\n", 0) == 0);
}

TEST_CASE("themes config validation") {
  ThemesConfig cfg;
  cfg.outer_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ThemesConfig{};
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(parse_variant("themes2"), ConfigError);
}
