#pragma once

#include <nlohmann/json.hpp>

#include "bayescloud/corpus.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/network.hpp"

namespace bayescloud {

/// [{variable, type: "categorical", states, probabilities} | {variable, type: "mixture", components: [...]}]
nlohmann::json marginals_to_json(const inference::Marginals& marginals);
inference::Marginals marginals_from_json(const nlohmann::json& j);

/// {ok, findings: [{code, variable, message}]}
nlohmann::json report_to_json(const ValidationReport& report);

/// [{region, hot_probability}]
nlohmann::json risks_to_json(const std::vector<corpus::RegionRisk>& risks);

/// {variables: [{name, kind, states}], arcs: [[from, to]]}
nlohmann::json structure_to_json(const BayesianNetwork& net);

}  // namespace bayescloud
