#include "bayescloud/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "bayescloud/error.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/integration.hpp"

namespace bayescloud::corpus {

using nlohmann::json;

GeoParams GeoParams::make(std::size_t depth, double k, double root_hot_prior) {
    GeoParams p;
    p.depth = depth;
    p.k = k;
    p.root_hot_prior = root_hot_prior;
    p.validate();
    return p;
}

void GeoParams::validate() const {
    const json details{{"depth", depth}, {"k", k}, {"p0", root_hot_prior}};
    if (depth < 1 || depth > 12) throw Error(ErrorCode::InvalidParams, "depth must be between 1 and 12", details);
    if (!(k > 0.5 && k < 1.0)) throw Error(ErrorCode::InvalidParams, "k must satisfy 0.5 < k < 1", details);
    if (!(root_hot_prior > 0.0 && root_hot_prior < 1.0)) {
        throw Error(ErrorCode::InvalidParams, "root hot prior must lie strictly between 0 and 1", details);
    }
    if (anchor && !(anchor->hot_prior > 0.0 && anchor->hot_prior < 1.0)) {
        throw Error(ErrorCode::InvalidParams, "anchor hot prior must lie strictly between 0 and 1", details);
    }
}

std::string region_name(std::size_t depth, std::size_t x, std::size_t y) {
    return "DZ_" + std::to_string(depth) + "_" + std::to_string(x) + "_" + std::to_string(y);
}

namespace {

std::vector<std::string> zone_states() { return {kHot, kCold}; }

DiscreteTable propagation(std::size_t parent, double k) { return DiscreteTable{{parent}, {k, 1.0 - k, 1.0 - k, k}}; }

double round4(double x) { return std::round(x * 1e4) / 1e4; }

/// Three-state ordinal row {none, low, high} rising with `t` in [0, 1].
std::vector<double> ordinal_row(double t, double low0, double low1, double high0, double high1) {
    const double high = round4(high0 + high1 * t);
    const double low = round4(low0 + low1 * t);
    return {round4(1.0 - high - low), low, high};
}

double discrete_marginal(const BayesianNetwork& net, const std::string& var, const std::string& state) {
    const auto m = inference::eliminate(net, {}, {var});
    const auto& c = std::get<inference::Categorical>(m.front().distribution);
    const auto it = std::find(c.states.begin(), c.states.end(), state);
    return c.probabilities[static_cast<std::size_t>(it - c.states.begin())];
}

}  // namespace

BayesianNetwork generate_geospatial(const GeoParams& params) {
    params.validate();
    BayesianNetwork net;
    std::optional<std::size_t> anchor;
    if (params.anchor) {
        anchor = net.add_variable(Variable::discrete(params.anchor->name, zone_states(),
                                                     "Dangerousness of the zone joining the regional model"));
        net.set_cpd(*anchor, DiscreteTable{{}, {params.anchor->hot_prior, 1.0 - params.anchor->hot_prior}});
    }
    const auto root = net.add_variable(Variable::discrete(region_name(1, 1, 1), zone_states(), "Whole territory"));
    if (anchor) {
        net.set_cpd(root, propagation(*anchor, params.k));
    } else {
        net.set_cpd(root, DiscreteTable{{}, {params.root_hot_prior, 1.0 - params.root_hot_prior}});
    }
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> level{{{1, 1}, root}};
    for (std::size_t d = 2; d <= params.depth; ++d) {
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> next;
        const std::size_t side = std::size_t{1} << (d - 1);
        for (std::size_t x = 1; x <= side; ++x) {
            for (std::size_t y = 1; y <= side; ++y) {
                const auto parent = level.at({(x + 1) / 2, (y + 1) / 2});
                const auto v = net.add_variable(Variable::discrete(region_name(d, x, y), zone_states()));
                net.set_cpd(v, propagation(parent, params.k));
                next[{x, y}] = v;
            }
        }
        level = std::move(next);
    }
    return net;
}

BayesianNetwork regional_spread_model() {
    BayesianNetwork net;
    const auto hws = net.add_variable(
        Variable::discrete("HasWarningSystems", {"yes", "no"}, "Region operates outbreak warning systems; illustrative CPT"));
    const auto rate = net.add_variable(
        Variable::discrete("RegionalSpreadRate", {"high", "low"}, "Regional virus spread rate; illustrative CPT"));
    const auto dz = net.add_variable(
        Variable::discrete("DangerousnessOfZone", zone_states(), "Dangerousness of the zone; illustrative CPT"));
    net.set_cpd(hws, DiscreteTable{{}, {0.4, 0.6}});
    net.set_cpd(rate, DiscreteTable{{hws}, {0.2, 0.8, 0.7, 0.3}});
    net.set_cpd(dz, DiscreteTable{{rate}, {0.8, 0.2, 0.1, 0.9}});
    return net;
}

BayesianNetwork virus_mutation_model() {
    const std::vector<std::string> levels{"low", "medium", "high"};
    BayesianNetwork net;
    const auto animal =
        net.add_variable(Variable::discrete("AnimalPopulation", levels, "Reservoir animal population; illustrative CPT"));
    const auto human = net.add_variable(Variable::discrete("HumanPopulation", levels, "Human population; illustrative CPT"));
    const auto mutated = net.add_variable(
        Variable::discrete("IsMutatedVirus", {"yes", "no"}, "Virus has mutated; illustrative CPT"));
    net.set_cpd(animal, DiscreteTable{{}, {0.3, 0.4, 0.3}});
    net.set_cpd(human, DiscreteTable{{}, {0.3, 0.5, 0.2}});
    std::vector<double> rows;
    for (int a = 0; a < 3; ++a) {
        for (int h = 0; h < 3; ++h) {
            const double yes = round4(0.02 + 0.08 * a + 0.08 * h + 0.04 * a * h);
            rows.push_back(yes);
            rows.push_back(round4(1.0 - yes));
        }
    }
    net.set_cpd(mutated, DiscreteTable{{animal, human}, rows});
    return net;
}

BayesianNetwork patient_model() {
    const std::vector<std::string> levels{"low", "medium", "high"};
    const std::vector<std::string> bins{"none", "low", "high"};
    const auto mutation = virus_mutation_model();
    const auto& animal_prior = std::get<DiscreteTable>(mutation.cpd(*mutation.index_of("AnimalPopulation"))).probabilities;
    const auto& human_prior = std::get<DiscreteTable>(mutation.cpd(*mutation.index_of("HumanPopulation")));
    const auto& mutation_rows = std::get<DiscreteTable>(mutation.cpd(*mutation.index_of("IsMutatedVirus"))).probabilities;

    BayesianNetwork net;
    const auto reservoir = net.add_variable(
        Variable::discrete("ReservoirPopulationSize", {"low", "high"}, "Reservoir population size; illustrative CPT"));
    const auto human = net.add_variable(Variable::discrete("HumanPopulation", levels, "Human population; illustrative CPT"));
    const auto mutated = net.add_variable(
        Variable::discrete("IsMutatedVirus", {"yes", "no"}, "Virus has mutated; mutation model with AnimalPopulation summed out"));
    const auto type = net.add_variable(
        Variable::discrete("VirusType", {"zaire", "sudan", "bundibugyo"}, "Ebola virus species; illustrative CPT"));
    net.set_cpd(reservoir, DiscreteTable{{}, {0.6, 0.4}});
    net.set_cpd(human, DiscreteTable{{}, human_prior.probabilities});
    // P(IsMutatedVirus | HumanPopulation) agrees with the mutation model, so the
    // two models can be merged without conflict.
    std::vector<double> mutated_rows;
    for (std::size_t h = 0; h < 3; ++h) {
        double yes = 0.0;
        for (std::size_t a = 0; a < 3; ++a) yes += animal_prior[a] * mutation_rows[(a * 3 + h) * 2];
        mutated_rows.push_back(yes);
        mutated_rows.push_back(1.0 - yes);
    }
    net.set_cpd(mutated, DiscreteTable{{human}, mutated_rows});
    net.set_cpd(type, DiscreteTable{{mutated}, {0.7, 0.2, 0.1, 0.5, 0.3, 0.2}});

    struct Category {
        const char* name;
        const char* description;
        double low0, low1, high0, high1;
    };
    const Category categories[] = {
        {"Confirmed", "Confirmed case count bin; illustrative CPT", 0.15, 0.2, 0.05, 0.4},
        {"Probable", "Probable case count bin; illustrative CPT", 0.12, 0.2, 0.03, 0.3},
        {"Suspected", "Suspected case count bin; illustrative CPT", 0.2, 0.2, 0.1, 0.4},
        {"Fatality", "Fatality count bin; illustrative CPT", 0.08, 0.25, 0.02, 0.35},
    };
    const double virulence[] = {2.0, 1.0, 0.0};
    for (const auto& c : categories) {
        const auto v = net.add_variable(Variable::discrete(c.name, bins, c.description));
        std::vector<double> rows;
        for (int r = 0; r < 2; ++r) {
            for (int h = 0; h < 3; ++h) {
                for (int t = 0; t < 3; ++t) {
                    const double pressure = (r + h + virulence[t]) / 5.0;
                    for (double p : ordinal_row(pressure, c.low0, c.low1, c.high0, c.high1)) rows.push_back(p);
                }
            }
        }
        net.set_cpd(v, DiscreteTable{{reservoir, human, type}, rows});
    }
    return net;
}

BayesianNetwork compose(const BayesianNetwork& bn1, const BayesianNetwork& bn2) {
    integration::shared_variables(bn1, bn2);
    integration::union_structure(bn1, bn2);
    const auto a1 = to_ast(bn1);
    const auto a2 = to_ast(bn2);
    script::ModelAst out;
    for (std::size_t v = 0; v < bn1.size(); ++v) {
        const auto& name = bn1.variable(v).name;
        auto j = bn2.index_of(name);
        if (!j) {
            out.nodes.push_back(a1.nodes[v]);
            continue;
        }
        std::set<std::string> p1, p2;
        for (auto p : bn1.parents(v)) p1.insert(bn1.variable(p).name);
        for (auto p : bn2.parents(*j)) p2.insert(bn2.variable(p).name);
        if (std::includes(p1.begin(), p1.end(), p2.begin(), p2.end())) {
            out.nodes.push_back(a1.nodes[v]);
        } else if (std::includes(p2.begin(), p2.end(), p1.begin(), p1.end())) {
            out.nodes.push_back(a2.nodes[*j]);
        } else {
            throw Error(ErrorCode::InvalidRequest,
                        "shared variable '" + name + "' has unrelated parent sets in the two sources",
                        {{"variable", name}});
        }
    }
    for (std::size_t v = 0; v < bn2.size(); ++v) {
        if (!bn1.index_of(bn2.variable(v).name)) out.nodes.push_back(a2.nodes[v]);
    }
    return compile(out);
}

namespace {

GeoParams anchored(GeoParams params, const BayesianNetwork& regional) {
    params.anchor = GeoAnchor{"DangerousnessOfZone", discrete_marginal(regional, "DangerousnessOfZone", kHot)};
    return params;
}

}  // namespace

BayesianNetwork integrated_model(const GeoParams& params) {
    const auto regional = regional_spread_model();
    const auto geo = generate_geospatial(anchored(params, regional));
    return compose(compose(compose(geo, regional), virus_mutation_model()), patient_model());
}

std::vector<CorpusEntry> build_corpus(const std::filesystem::path& dir, const GeoParams& params) {
    params.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());

    const auto regional = regional_spread_model();
    const auto geo_params = anchored(params, regional);
    const std::vector<std::pair<std::string, BayesianNetwork>> models{
        {"geospatial.bns", generate_geospatial(geo_params)},
        {"regional-spread.bns", regional},
        {"virus-mutation.bns", virus_mutation_model()},
        {"patient.bns", patient_model()},
        {"integrated.bns", integrated_model(params)},
    };

    auto write = [&](const std::string& name, const std::string& text) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << text;
        out.close();
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    };

    std::vector<CorpusEntry> entries;
    json files = json::array();
    for (const auto& [name, net] : models) {
        write(name, to_script(net));
        entries.push_back({name, net.size()});
        files.push_back({{"file", name}, {"nodes", net.size()}, {"arcs", net.arcs().size()}});
    }
    json manifest{
        {"files", files},
        {"parameters",
         {{"depth", params.depth},
          {"k", params.k},
          {"root_hot_prior", params.root_hot_prior},
          {"anchor", {{"name", geo_params.anchor->name}, {"hot_prior", geo_params.anchor->hot_prior}}}}},
        {"notes", "probabilities outside the geospatial pyramid are illustrative"},
    };
    write("corpus-manifest.json", manifest.dump(2) + "\n");
    return entries;
}

std::vector<RegionRisk> run_scenario(const BayesianNetwork& net, const script::Evidence& reports) {
    for (const auto& [name, value] : reports.assignments) {
        if (!net.index_of(name)) throw Error(ErrorCode::UnknownRegion, "unknown region '" + name + "'", {{"variable", name}});
    }
    std::vector<std::string> regions;
    for (const auto& v : net.variables()) {
        if (v.name.rfind("DZ_", 0) == 0 && v.is_discrete() && v.state_index(kHot)) regions.push_back(v.name);
    }
    std::vector<RegionRisk> out;
    if (regions.empty()) return out;
    const auto marginals = inference::infer(net, reports, regions);
    for (const auto& m : marginals) {
        const auto& c = std::get<inference::Categorical>(m.distribution);
        const auto it = std::find(c.states.begin(), c.states.end(), kHot);
        out.push_back({m.variable, c.probabilities[static_cast<std::size_t>(it - c.states.begin())]});
    }
    std::sort(out.begin(), out.end(), [](const RegionRisk& a, const RegionRisk& b) {
        if (a.hot_probability != b.hot_probability) return a.hot_probability > b.hot_probability;
        return a.region < b.region;
    });
    return out;
}

}  // namespace bayescloud::corpus
