#pragma once

#include "evolal/config.hpp"
#include "evolal/eval.hpp"
#include "evolal/serialize.hpp"

#include <functional>
#include <string>
#include <vector>

namespace evolal {

// bc, gp-dqn, edm, em-edm, themes0, themes1, themes.
const std::vector<std::string>& method_names();

struct TrainedMethod {
  std::string name;
  StepPredictor predict;
  std::function<Json()> describe;  // model document
};

/// Fits one method on standardized training data. All randomness derives
/// from `seed`. Unknown names are ConfigErrors. gp-dqn needs test scores on
/// every trajectory for its delayed return.
TrainedMethod train_method(const std::string& name, const Dataset& train, const RunConfig& config, uint64_t seed);

MethodSpec method_spec(const std::string& name, const RunConfig& config);

}  // namespace evolal
