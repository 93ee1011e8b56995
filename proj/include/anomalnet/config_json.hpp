#pragma once

#include <json.hpp>

#include "anomalnet/model.hpp"

namespace anomalnet {

nlohmann::json model_config_to_json(const ModelConfig& config);

// Applies the fields present in `j` on top of `base`; unknown keys throw
// Error(config) when `strict` is set.
ModelConfig model_config_from_json(const nlohmann::json& j, const ModelConfig& base = {},
                                   bool strict = false);

} // namespace anomalnet
