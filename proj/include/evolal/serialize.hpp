#pragma once

#include "evolal/baselines.hpp"
#include "evolal/synth.hpp"
#include "evolal/themes.hpp"

#include <json.hpp>

#include <string>

namespace evolal {

using Json = nlohmann::ordered_json;

// Matrices are {"rows", "cols", "data"} with data row-major. Doubles are
// written with round-trip precision, so every conversion here is lossless.
Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

/// Config readers fill a copy of `defaults` and reject unknown keys and
/// mistyped values with ConfigError naming the offending key path. Seeds are
/// not part of configs; they come from the run seed.
Json to_json(const TrainConfig& c);
Json to_json(const EDMConfig& c);
Json to_json(const EMConfig& c);  // without the nested EDM config
Json to_json(const IRLConfig& c);
Json to_json(const PartitionConfig& c);
Json to_json(const ThemesConfig& c);  // nested sections partition, em, edm, irl
Json to_json(const GPConfig& c);
Json to_json(const DQNConfig& c);
Json to_json(const EmitterConfig& c);

TrainConfig train_config_from_json(const Json& j, TrainConfig defaults, const std::string& path);
EDMConfig edm_config_from_json(const Json& j, EDMConfig defaults, const std::string& path);
EMConfig em_config_from_json(const Json& j, EMConfig defaults, const std::string& path);
IRLConfig irl_config_from_json(const Json& j, IRLConfig defaults, const std::string& path);
PartitionConfig partition_config_from_json(const Json& j, PartitionConfig defaults, const std::string& path);
ThemesConfig themes_config_from_json(const Json& j, ThemesConfig defaults, const std::string& path);
GPConfig gp_config_from_json(const Json& j, GPConfig defaults, const std::string& path);
DQNConfig dqn_config_from_json(const Json& j, DQNConfig defaults, const std::string& path);
EmitterConfig emitter_config_from_json(const Json& j, EmitterConfig defaults, const std::string& path);

Json to_json(const PolicyNet& net);
PolicyNet policy_net_from_json(const Json& j);
Json to_json(const Standardization& s);
Standardization standardization_from_json(const Json& j);
Json to_json(const PartitionModel& m);
PartitionModel partition_model_from_json(const Json& j);
Json to_json(const MixtureModel& m);
MixtureModel mixture_model_from_json(const Json& j);
Json to_json(const RewardRegulator& r);
RewardRegulator regulator_from_json(const Json& j);
Json to_json(const ThemesModel& m);
ThemesModel themes_model_from_json(const Json& j);

}  // namespace evolal
