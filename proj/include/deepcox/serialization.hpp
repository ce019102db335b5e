#pragma once

#include "deepcox/coxlinear.hpp"
#include "deepcox/data.hpp"
#include "deepcox/metrics.hpp"
#include "deepcox/optim.hpp"
#include "deepcox/recommend.hpp"
#include "deepcox/riskmlp.hpp"
#include "deepcox/simulate.hpp"

#include <json.hpp>

namespace deepcox {

using Json = nlohmann::json;

Json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const Json& j);

Json to_json(const OptimizerConfig& config);
OptimizerConfig optimizer_config_from_json(const Json& j);

Json to_json(const SimulationSpec& spec);
SimulationSpec simulation_spec_from_json(const Json& j);

Json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const Json& j);

Json to_json(const StandardizationParams& params);

/// {type, beta, converged, iterations, log_likelihood, diverged}
Json to_json(const LinearCoxModel& model);
/// {type, config, layers: [{rows, cols, weights (row-major), bias}]}
Json to_json(const RiskNetwork& net);
Json to_json(const RiskModel& model);
RiskModel risk_model_from_json(const Json& j);

Json to_json(const TrainingHistory& history);
Json to_json(const KaplanMeierCurve& curve);
Json to_json(const LogRankResult& result);
Json to_json(const SearchTrial& trial);
Json to_json(const RecommendationReport& report);

/// NaN and infinities become null.
Json number_or_null(double value);

} // namespace deepcox
