// Runs every acceptance criterion at its stated tolerance and runtime limit.
// Prints one PASS/FAIL line per criterion; exits non-zero if any fails.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "bayescloud/corpus.hpp"
#include "bayescloud/error.hpp"
#include "bayescloud/http_server.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/integration.hpp"
#include "bayescloud/json_io.hpp"
#include "bayescloud/learning.hpp"
#include "bayescloud/registry.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bayescloud;
using nlohmann::json;
using oracle::fixture;
using oracle::slurp;

namespace {

/// Collects the first failed check of a criterion.
struct Check {
    std::ostringstream why;
    bool ok = true;

    void that(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            why << what;
        }
    }
    void near(double actual, double expected, double tol, const std::string& what) {
        std::ostringstream s;
        s << what << ": got " << actual << ", expected " << expected << " +- " << tol;
        that(std::abs(actual - expected) <= tol, s.str());
    }
    void at_most(double actual, double bound, const std::string& what) {
        std::ostringstream s;
        s << what << ": " << actual << " > " << bound;
        that(actual <= bound, s.str());
    }
};

int failures = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<void(Check&)>& body) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.that(false, std::string("unexpected exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream limit;
    limit << "runtime " << seconds << " s exceeds " << limit_seconds << " s";
    c.that(seconds < limit_seconds, limit.str());
    std::cout << (c.ok ? "PASS " : "FAIL ") << name << " (" << std::fixed;
    std::cout.precision(3);
    std::cout << seconds << " s)";
    std::cout.unsetf(std::ios::fixed);
    std::cout.precision(6);
    if (!c.ok) {
        std::cout << ": " << c.why.str();
        ++failures;
    }
    std::cout << std::endl;
}

BayesianNetwork load(const std::string& name) { return compile_script(slurp(fixture(name))); }

double categorical(const inference::Marginal& m, const std::string& state) {
    const auto& c = std::get<inference::Categorical>(m.distribution);
    for (std::size_t i = 0; i < c.states.size(); ++i) {
        if (c.states[i] == state) return c.probabilities[i];
    }
    throw std::runtime_error("no state " + state);
}

double posterior(const BayesianNetwork& net, const std::string& var, const std::string& state,
                 const script::Evidence& evidence = {}) {
    return categorical(inference::infer(net, evidence, {var})[0], state);
}

double table_entry(const BayesianNetwork& net, const std::string& var, std::size_t row, std::size_t state) {
    const auto v = net.require_index(var);
    const auto& t = std::get<DiscreteTable>(net.cpd(v));
    return t.probabilities[row * net.variable(v).cardinality() + state];
}

BayesianNetwork single(const std::string& name, double p) {
    BayesianNetwork net;
    net.add_variable(Variable::discrete(name, {"a1", "a2"}));
    net.set_cpd(0, DiscreteTable{{}, {p, 1.0 - p}});
    return net;
}

class ScratchDir {
public:
    ScratchDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("bayescloud-acceptance-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void script_one_posterior(Check& c) {
    const auto net = load("script1.bns");
    const auto e = oracle::ev({{"Haemorrhage", "yes"}});
    const auto exact = oracle::enumerate_posterior(net, {{1, 0}}, 0);
    c.near(exact[0], 0.09 / 0.099, 1e-12, "enumeration oracle");
    c.near(posterior(net, "EbolaVirusDisease", "has", e), exact[0], 1e-9, "eliminate");
    inference::GibbsOptions g;
    g.samples = 50000;
    g.seed = 7;
    const auto gibbs = inference::gibbs_query(net, e, {"EbolaVirusDisease"}, g);
    c.near(categorical(gibbs[0], "has"), exact[0], 0.01, "gibbs at 50k sweeps");
}

void script_two_posterior(Check& c) {
    const auto net = load("script2.bns");
    const double has = 0.1 * oracle::normal_pdf(100.0, 103.0, 1.0);
    const double nope = 0.9 * oracle::normal_pdf(100.0, 98.6, 1.0);
    const auto e = oracle::ev({{"Fever", 100.0}});
    c.near(posterior(net, "EbolaVirusDisease", "has", e), has / (has + nope), 1e-9, "P(has | Fever = 100)");
}

void enumeration_equivalence(Check& c) {
    std::mt19937_64 rng(2024);
    std::size_t checked = 0;
    for (int trial = 0; trial < 200 && c.ok; ++trial) {
        const auto net =
            oracle::random_discrete_net(rng, {.max_vars = 10, .min_vars = 6, .max_states = 2, .zeros = trial % 4 == 0});
        auto ev = oracle::random_evidence(rng, net, 3);
        std::vector<std::string> names;
        for (const auto& v : net.variables()) names.push_back(v.name);
        if (oracle::enumerate_posterior(net, ev, 0).empty()) {
            // Impossible evidence: the eliminator must refuse it as well.
            bool refused = false;
            try {
                inference::eliminate(net, oracle::named(net, ev), names);
            } catch (const Error& e) {
                refused = e.code() == ErrorCode::ZeroProbabilityEvidence;
            }
            c.that(refused, "impossible evidence accepted on net " + std::to_string(trial));
            ++checked;
            continue;
        }
        const auto post = inference::eliminate(net, oracle::named(net, ev), names);
        for (std::size_t v = 0; v < net.size(); ++v) {
            const auto& got = std::get<inference::Categorical>(post[v].distribution).probabilities;
            c.at_most(oracle::max_abs_diff(got, oracle::enumerate_posterior(net, ev, v)), 1e-9,
                      "net " + std::to_string(trial) + " variable " + net.variable(v).name);
        }
        ++checked;
    }
    c.that(checked == 200, "not every network was checked");
}

void merge_fixed_point(Check& c) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50 && c.ok; ++trial) {
        const auto net = oracle::random_discrete_net(rng, {.max_vars = 4, .min_vars = 2, .max_states = 2});
        const auto merged = integration::merge_optimize(net, net).network;
        c.at_most(oracle::max_abs_diff(oracle::joint_over(merged, net.variables()), integration::joint_table(net)), 1e-6,
                  "net " + std::to_string(trial));
    }
}

void merge_conflict(Check& c) {
    double best_x = 0.0, best_f = INFINITY;
    for (int i = 0; i <= 1000000; ++i) {
        const double x = i * 1e-6;
        const double f = oracle::conflict_objective(x, 0.2, 0.4);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    c.near(best_x, 0.28990, 1e-5, "grid minimizer");
    const auto opt = integration::merge_optimize(single("A", 0.2), single("A", 0.4)).network;
    c.near(table_entry(opt, "A", 0, 0), best_x, 1e-4, "merge_optimize P(a1)");
    integration::MergeOptions o;
    o.seed = 5;
    const auto sim = integration::merge_simulate(single("A", 0.2), single("A", 0.4), o).network;
    c.near(table_entry(sim, "A", 0, 0), 0.30, 0.02, "merge_simulate P(a1)");
}

void merge_script_one_two(Check& c) {
    integration::MergeOptions o;
    o.sample_count = 50000;
    o.seed = 3;
    const auto merged = integration::merge_simulate(load("script1.bns"), load("script2.bns"), o).network;
    c.that(merged.arcs() == std::set<std::pair<std::string, std::string>>{{"EbolaVirusDisease", "Haemorrhage"},
                                                                          {"EbolaVirusDisease", "Fever"}},
           "merged arcs differ");
    c.near(table_entry(merged, "EbolaVirusDisease", 0, 0), 0.1, 0.01, "P(has)");
    c.near(table_entry(merged, "Haemorrhage", 0, 0), 0.9, 0.02, "P(Haemorrhage = yes | has)");
}

void disjoint_merge(Check& c) {
    std::vector<std::pair<BayesianNetwork, BayesianNetwork>> pairs = {{load("script1.bns"), load("flu.bns")}};
    std::mt19937_64 rng(303);
    for (int i = 0; i < 10; ++i) {
        pairs.emplace_back(oracle::random_discrete_net(rng, {.max_vars = 3, .prefix = "A"}),
                           oracle::random_discrete_net(rng, {.max_vars = 3, .prefix = "B"}));
    }
    for (const auto& [a, b] : pairs) {
        const auto merged = integration::merge(a, b, integration::MergeMethod::Optimize).network;
        c.that(merged.size() == a.size() + b.size(), "union lost variables");
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = a.size(); j < merged.size(); ++j) {
                const auto joint = oracle::pair_joint(merged, i, j);
                c.at_most(std::abs(oracle::mutual_information(joint, merged.variable(i).cardinality(),
                                                              merged.variable(j).cardinality())),
                          1e-12, "I(" + merged.variable(i).name + "; " + merged.variable(j).name + ")");
            }
        }
    }
}

void learning_recovery(Check& c) {
    const auto s1 = load("script1.bns");
    const auto fit1 = learning::learn_parameters(s1.dag(), inference::sample_forward(s1, 100000, 11)).network;
    for (std::size_t v = 0; v < s1.size(); ++v) {
        c.at_most(oracle::max_abs_diff(std::get<DiscreteTable>(fit1.cpd(v)).probabilities,
                                       std::get<DiscreteTable>(s1.cpd(v)).probabilities),
                  0.01, "script 1 table " + s1.variable(v).name);
    }
    const auto s2 = load("script2.bns");
    const auto fit2 = learning::learn_parameters(s2.dag(), inference::sample_forward(s2, 100000, 11)).network;
    c.at_most(oracle::max_abs_diff(std::get<DiscreteTable>(fit2.cpd(0)).probabilities,
                                   std::get<DiscreteTable>(s2.cpd(0)).probabilities),
              0.01, "script 2 prior");
    const auto& fever = std::get<ClgSpec>(fit2.cpd(fit2.require_index("Fever")));
    c.near(fever.components[0].intercept, 103.0, 0.05, "Fever mean given has");
    c.near(fever.components[1].intercept, 98.6, 0.05, "Fever mean given not");

    const auto pair = compile_script(R"(
defineNode(A, x); { defineState(Discrete, a1, a2); p(A) = {a1: 0.5; a2: 0.5;} }
defineNode(B, x); { defineState(Discrete, b1, b2); p(B | A) = if (A == a1) {b1: 0.9; b2: 0.1;} else {b1: 0.1; b2: 0.9;} }
)");
    const auto strong = learning::learn_structure(inference::sample_forward(pair, 20000, 51)).network.arcs();
    c.that(strong.size() == 1, "strong dependence: expected one arc");
    if (strong.size() == 1) {
        const auto& [from, to] = *strong.begin();
        c.that(std::set<std::string>{from, to} == std::set<std::string>{"A", "B"}, "wrong skeleton");
    }
    Dataset independent;
    independent.columns = {Variable::discrete("A", {"a1", "a2"}), Variable::discrete("B", {"b1", "b2"})};
    std::mt19937_64 rng(52);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 20000; ++i) independent.rows.push_back({coin(rng) ? 1.0 : 0.0, coin(rng) ? 1.0 : 0.0});
    c.that(learning::learn_structure(independent).network.arcs().empty(), "independent data produced arcs");
}

void geospatial_properties(Check& c) {
    const auto net = corpus::generate_geospatial({});
    c.that(net.size() == 21, "expected 21 nodes, got " + std::to_string(net.size()));
    c.that(net.arcs().size() == 20, "expected 20 arcs, got " + std::to_string(net.arcs().size()));
    const auto e = oracle::ev({{"DZ_3_1_3", "hot_zone"}});
    const auto hot = [&](const char* region, const script::Evidence& ev) { return posterior(net, region, "hot_zone", ev); };

    const double sibling = hot("DZ_3_2_3", e);
    for (const auto* s : {"DZ_3_2_3", "DZ_3_1_4", "DZ_3_2_4"}) {
        c.that(hot(s, e) > hot(s, {}), std::string("sibling not raised: ") + s);
        c.near(hot(s, e), sibling, 1e-9, std::string("sibling symmetry ") + s);
    }
    for (const auto* s : {"DZ_3_1_1", "DZ_3_2_2", "DZ_3_3_1", "DZ_3_4_4"}) {
        c.that(hot(s, e) > hot(s, {}), std::string("cousin not raised: ") + s);
    }
}

void registry_contract(Check& c) {
    ScratchDir dir;
    std::string evd;
    {
        registry::Registry reg(dir.path());
        registry::NewModel m;
        m.title = "EVD haemorrhage";
        m.author = "acceptance";
        m.keywords = {"ebola"};
        m.script = slurp(fixture("script1.bns"));
        evd = reg.register_model(m);
        const auto hits = reg.search("Ebola");
        c.that(hits.size() == 1 && hits[0].id == evd, "search misses the record");
        c.that(script::parse_model(reg.get(evd).script) == script::parse_model(m.script), "stored script differs");
        const auto before = reg.get(evd);
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        const auto after = reg.update(evd, {.title = "renamed"});
        c.that(after.script == before.script && after.updated_at > before.updated_at, "title update is not isolated");
        const auto doomed = reg.register_model(m);
        reg.remove(doomed);
        bool gone = false;
        try {
            reg.get(doomed);
        } catch (const Error& e) {
            gone = e.code() == ErrorCode::NotFound;
        }
        c.that(gone, "deleted record still readable");
    }

    registry::Registry reg(dir.path());
    c.that(reg.size() == 1 && reg.get(evd).title == "renamed", "record lost across restart");

    HttpService service(reg);
    const int port = service.bind("127.0.0.1", 0);
    c.that(port > 0, "could not bind");
    if (port <= 0) return;
    std::thread server([&] { service.run(); });
    service.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    std::map<std::string, std::string> ids;
    std::size_t fixtures = 0;
    for (const auto& entry : fs::directory_iterator(fixture("contract"))) {
        const auto contract = json::parse(slurp(entry.path().string()));
        const auto file = contract.at("model").get<std::string>();
        if (!ids.count(file)) {
            json body{{"title", file}, {"script", slurp(fixture(file))}};
            auto res = client.Post("/models", body.dump(), "application/json");
            c.that(res && res->status == 201, "registration over HTTP failed");
            if (!res || res->status != 201) break;
            ids[file] = json::parse(res->body).at("id");
        }
        json request{{"evidence", contract.at("evidence")}, {"query", contract.at("query")}};
        auto res = client.Post(("/models/" + ids[file] + "/infer").c_str(), request.dump(), "application/json");
        c.that(res && res->status == 200, "remote infer failed for " + entry.path().filename().string());
        if (!res) break;
        const auto local = inference::infer(compile_script(reg.get(ids[file]).script),
                                            script::parse_evidence(contract.at("evidence").get<std::string>()),
                                            contract.at("query").get<std::vector<std::string>>());
        c.that(marginals_from_json(json::parse(res->body)) == local,
               "remote differs from local for " + entry.path().filename().string());
        ++fixtures;
    }
    c.that(fixtures >= 5, "fewer than five contract fixtures ran");
    service.stop();
    server.join();
}

}  // namespace

int main() {
    criterion("script-1 posterior", 1.0, script_one_posterior);
    criterion("script-2 hybrid posterior", 1.0, script_two_posterior);
    criterion("enumeration equivalence", 30.0, enumeration_equivalence);
    criterion("merge fixed point", 60.0, merge_fixed_point);
    criterion("merge conflict case", 10.0, merge_conflict);
    criterion("merge of script 1 and script 2 via simulate", 30.0, merge_script_one_two);
    criterion("disjoint merge", 1.0, disjoint_merge);
    criterion("learning recovery", 60.0, learning_recovery);
    criterion("geospatial properties", 10.0, geospatial_properties);
    criterion("registry contract", 10.0, registry_contract);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
