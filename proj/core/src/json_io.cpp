#include "bayescloud/json_io.hpp"

#include "bayescloud/error.hpp"

namespace bayescloud {

using nlohmann::json;

json marginals_to_json(const inference::Marginals& marginals) {
    json out = json::array();
    for (const auto& m : marginals) {
        if (const auto* c = std::get_if<inference::Categorical>(&m.distribution)) {
            out.push_back({{"variable", m.variable},
                           {"type", "categorical"},
                           {"states", c->states},
                           {"probabilities", c->probabilities}});
        } else {
            const auto& mix = std::get<inference::GaussianMixture>(m.distribution);
            json comps = json::array();
            for (const auto& k : mix.components) {
                comps.push_back({{"weight", k.weight}, {"mean", k.mean}, {"variance", k.variance}});
            }
            out.push_back({{"variable", m.variable}, {"type", "mixture"}, {"mean", mix.mean()}, {"components", comps}});
        }
    }
    return out;
}

inference::Marginals marginals_from_json(const json& j) {
    inference::Marginals out;
    try {
        for (const auto& e : j) {
            inference::Marginal m;
            m.variable = e.at("variable").get<std::string>();
            if (e.at("type") == "categorical") {
                m.distribution = inference::Categorical{e.at("states").get<std::vector<std::string>>(),
                                                        e.at("probabilities").get<std::vector<double>>()};
            } else {
                inference::GaussianMixture mix;
                for (const auto& c : e.at("components")) {
                    mix.components.push_back(
                        {c.at("weight").get<double>(), c.at("mean").get<double>(), c.at("variance").get<double>()});
                }
                m.distribution = std::move(mix);
            }
            out.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("malformed marginals document: ") + e.what());
    }
    return out;
}

json report_to_json(const ValidationReport& report) {
    json findings = json::array();
    for (const auto& f : report.findings) {
        findings.push_back({{"code", f.code}, {"variable", f.variable}, {"message", f.message}});
    }
    return {{"ok", report.ok()}, {"findings", findings}};
}

json risks_to_json(const std::vector<corpus::RegionRisk>& risks) {
    json out = json::array();
    for (const auto& r : risks) out.push_back({{"region", r.region}, {"hot_probability", r.hot_probability}});
    return out;
}

json structure_to_json(const BayesianNetwork& net) {
    json vars = json::array();
    for (const auto& v : net.variables()) {
        vars.push_back({{"name", v.name}, {"kind", v.is_discrete() ? "discrete" : "continuous"}, {"states", v.states}});
    }
    json arcs = json::array();
    for (const auto& [from, to] : net.arcs()) arcs.push_back({from, to});
    return {{"variables", vars}, {"arcs", arcs}};
}

}  // namespace bayescloud
