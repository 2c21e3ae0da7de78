#pragma once

#include "evolal/core.hpp"

#include <random>
#include <string>
#include <vector>

namespace testing_util {

inline evolal::Trajectory make_trajectory(const std::string& id, const std::vector<std::vector<double>>& states,
                                          std::vector<int> actions = {}, double dt = 1.0) {
  evolal::Trajectory t;
  t.id = id;
  t.semester = "S21";
  for (std::size_t i = 0; i < states.size(); ++i) {
    evolal::Step s;
    s.state = Eigen::Map<const evolal::Vector>(states[i].data(), static_cast<Eigen::Index>(states[i].size()));
    s.action = actions.empty() ? 0 : actions[i];
    s.time = dt * static_cast<double>(i);
    t.steps.push_back(std::move(s));
  }
  return t;
}

inline evolal::Matrix random_spd(int d, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> n(0.0, 1.0);
  evolal::Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  evolal::Matrix s = a * a.transpose() / d;
  s.diagonal().array() += ridge;
  return s;
}

}  // namespace testing_util
