#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bayescloud/bnscript.hpp"
#include "bayescloud/corpus.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/integration.hpp"
#include "bayescloud/learning.hpp"
#include "bayescloud/registry.hpp"

using namespace bayescloud;

namespace {

std::string fixture_text(const std::string& name) {
    std::ifstream in(std::string(BAYESCLOUD_FIXTURE_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

BayesianNetwork fixture_net(const std::string& name) { return compile_script(fixture_text(name)); }

BayesianNetwork single(double p) {
    BayesianNetwork net;
    net.add_variable(Variable::discrete("A", {"a1", "a2"}));
    net.set_cpd(0, DiscreteTable{{}, {p, 1.0 - p}});
    return net;
}

std::vector<std::string> names(const BayesianNetwork& net) {
    std::vector<std::string> out;
    for (const auto& v : net.variables()) out.push_back(v.name);
    return out;
}

}  // namespace

static void BM_ParseAndCompileIntegrated(benchmark::State& state) {
    const auto text = to_script(corpus::integrated_model());
    for (auto _ : state) benchmark::DoNotOptimize(compile_script(text));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseAndCompileIntegrated);

static void BM_EliminateGeospatial(benchmark::State& state) {
    const auto net = corpus::generate_geospatial(corpus::GeoParams::make(state.range(0), 0.9, 0.05));
    const auto leaf = corpus::region_name(state.range(0), 1, 1);
    script::Evidence e;
    e.assignments[leaf] = std::string("hot_zone");
    const auto query = names(net);
    for (auto _ : state) benchmark::DoNotOptimize(inference::eliminate(net, e, query));
    state.counters["nodes"] = static_cast<double>(net.size());
}
BENCHMARK(BM_EliminateGeospatial)->DenseRange(2, 4)->Unit(benchmark::kMicrosecond);

static void BM_ScenarioIntegrated(benchmark::State& state) {
    const auto net = corpus::integrated_model();
    script::Evidence e;
    e.assignments["DZ_3_1_3"] = std::string("hot_zone");
    for (auto _ : state) benchmark::DoNotOptimize(corpus::run_scenario(net, e));
}
BENCHMARK(BM_ScenarioIntegrated)->Unit(benchmark::kMillisecond);

static void BM_ClgLeafScriptTwo(benchmark::State& state) {
    const auto net = fixture_net("script2.bns");
    script::Evidence e;
    e.assignments["Fever"] = 100.0;
    for (auto _ : state) benchmark::DoNotOptimize(inference::infer(net, e, {"EbolaVirusDisease"}));
}
BENCHMARK(BM_ClgLeafScriptTwo);

static void BM_GibbsScriptOne(benchmark::State& state) {
    const auto net = fixture_net("script1.bns");
    script::Evidence e;
    e.assignments["Haemorrhage"] = std::string("yes");
    inference::GibbsOptions o;
    o.samples = static_cast<std::size_t>(state.range(0));
    o.burn_in = o.samples / 10;
    for (auto _ : state) benchmark::DoNotOptimize(inference::gibbs_query(net, e, {"EbolaVirusDisease"}, o));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GibbsScriptOne)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

static void BM_SampleForwardGeospatial(benchmark::State& state) {
    const auto net = corpus::generate_geospatial({});
    for (auto _ : state) benchmark::DoNotOptimize(inference::sample_forward(net, state.range(0), 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleForwardGeospatial)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_MergeOptimizeConflict(benchmark::State& state) {
    const auto a = single(0.2), b = single(0.4);
    for (auto _ : state) benchmark::DoNotOptimize(integration::merge_optimize(a, b));
}
BENCHMARK(BM_MergeOptimizeConflict)->Unit(benchmark::kMicrosecond);

static void BM_MergeOptimizeCorpus(benchmark::State& state) {
    const auto mutation = corpus::virus_mutation_model();
    const auto patient = corpus::patient_model();
    for (auto _ : state) benchmark::DoNotOptimize(integration::merge_optimize(mutation, patient));
}
BENCHMARK(BM_MergeOptimizeCorpus)->Unit(benchmark::kMillisecond);

static void BM_MergeSimulateScripts(benchmark::State& state) {
    const auto a = fixture_net("script1.bns"), b = fixture_net("script2.bns");
    integration::MergeOptions o;
    o.sample_count = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(integration::merge_simulate(a, b, o));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MergeSimulateScripts)->Arg(50000)->Unit(benchmark::kMillisecond);

static void BM_LearnParametersScriptTwo(benchmark::State& state) {
    const auto net = fixture_net("script2.bns");
    const auto data = inference::sample_forward(net, state.range(0), 11);
    for (auto _ : state) benchmark::DoNotOptimize(learning::learn_parameters(net.dag(), data));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LearnParametersScriptTwo)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_LearnStructureGeospatial(benchmark::State& state) {
    const auto net = corpus::generate_geospatial(corpus::GeoParams::make(2, 0.9, 0.3));
    const auto data = inference::sample_forward(net, state.range(0), 5);
    learning::LearnOptions o;
    o.restarts = 3;
    for (auto _ : state) benchmark::DoNotOptimize(learning::learn_structure(data, o));
}
BENCHMARK(BM_LearnStructureGeospatial)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_RegistrySearch(benchmark::State& state) {
    const auto dir = std::filesystem::temp_directory_path() / "bayescloud-bench-registry";
    std::filesystem::remove_all(dir);
    {
        registry::Registry reg(dir);
        registry::NewModel m;
        m.script = fixture_text("script1.bns");
        for (int i = 0; i < state.range(0); ++i) {
            m.title = "model " + std::to_string(i);
            m.keywords = {i % 2 ? "ebola" : "influenza", "k" + std::to_string(i % 17)};
            reg.register_model(m);
        }
        for (auto _ : state) benchmark::DoNotOptimize(reg.search("Ebola k3"));
    }
    std::filesystem::remove_all(dir);
}
BENCHMARK(BM_RegistrySearch)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
