#pragma once

#include "attrition/payoffs.hpp"

#include <json.hpp>

#include <string>

namespace attrition::io {

using Json = nlohmann::ordered_json;

struct ModelOverrides {
    bool deterministic = false;   // drop the noise term
    bool heterogeneous = false;   // build the per-firm model even from a standard document
};

// Model document (schema "attrition-model/1"). Errors name the offending key
// and are reported as Error(Config).
//
//   diffusion: {kind: abm|gbm|ou|custom, ...parameters}
//   window:    [lo, hi]                                  optional
//   r, pi, w, l1, l2                                     standard model
//   firms:     [{r, pi, w, l}, {r, pi, w, l}]            heterogeneous model
//
// A function is a number (constant), {family, coef}, or an array of those
// summed.
GameModel model_from_json(const Json& doc, const ModelOverrides& overrides = {});
GameModel load_model(const std::string& path, const ModelOverrides& overrides = {});
Json read_json_file(const std::string& path);

ScalarFunction function_from_json(const Json& value, const std::string& key);
Json function_to_json(const ScalarFunction& f);

// Resolved model, including the window actually used.
Json model_to_json(const GameModel& model);

}  // namespace attrition::io
