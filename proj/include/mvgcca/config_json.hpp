#pragma once

#include "mvgcca/synthgen.hpp"
#include "mvgcca/trainer.hpp"

#include <json.hpp>

namespace mvgcca {

// Every field is written; reading requires every field, so a manifest
// always pins the full configuration.
void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

std::string to_string(ValidationTarget target);
ValidationTarget parse_validation_target(const std::string& name);

}  // namespace mvgcca
