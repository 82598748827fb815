#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "bayescloud/error.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/learning.hpp"
#include "oracles.hpp"

using namespace bayescloud;
using namespace bayescloud::learning;

namespace {

BayesianNetwork script1() { return compile_script(oracle::slurp(oracle::fixture("script1.bns"))); }
BayesianNetwork script2() { return compile_script(oracle::slurp(oracle::fixture("script2.bns"))); }

ErrorCode error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

const std::vector<double>& table(const BayesianNetwork& net, const std::string& name) {
    return std::get<DiscreteTable>(net.cpd(net.require_index(name))).probabilities;
}

Dag empty_dag(const std::vector<Variable>& vars) {
    Dag d;
    d.variables = vars;
    d.parents.assign(vars.size(), {});
    return d;
}

// Log-likelihood minus the BIC penalty, evaluated row by row from the joint.
double bic_oracle(const BayesianNetwork& net, const Dataset& data) {
    double ll = 0.0;
    for (const auto& row : data.rows) ll += log_joint_probability(net, row);
    double params = 0.0;
    for (std::size_t v = 0; v < net.size(); ++v) {
        const auto& t = std::get<DiscreteTable>(net.cpd(v));
        params += static_cast<double>((net.variable(v).cardinality() - 1) * configuration_count(net, t.parents));
    }
    return ll - params / 2.0 * std::log(static_cast<double>(data.row_count()));
}

Dataset independent_uniform(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    Dataset d;
    d.columns = {Variable::discrete("A", {"a1", "a2"}), Variable::discrete("B", {"b1", "b2"})};
    for (std::size_t i = 0; i < n; ++i) d.rows.push_back({coin(rng) ? 1.0 : 0.0, coin(rng) ? 1.0 : 0.0});
    return d;
}

BayesianNetwork strong_pair() {
    return compile_script(R"(
defineNode(A, x); { defineState(Discrete, a1, a2); p(A) = {a1: 0.5; a2: 0.5;} }
defineNode(B, x); { defineState(Discrete, b1, b2); p(B | A) = if (A == a1) {b1: 0.9; b2: 0.1;} else {b1: 0.1; b2: 0.9;} }
)");
}

double max_param_error(const BayesianNetwork& a, const BayesianNetwork& b) {
    double m = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        m = std::max(m, oracle::max_abs_diff(std::get<DiscreteTable>(a.cpd(v)).probabilities,
                                             std::get<DiscreteTable>(b.cpd(v)).probabilities));
    }
    return m;
}

}  // namespace

TEST(LearnParameters, LaplaceArithmetic) {
    Dataset one;
    one.columns = {Variable::discrete("X", {"seen", "unseen"})};
    one.rows = {{0.0}};
    const auto fit = learn_parameters(empty_dag(one.columns), one);
    EXPECT_NEAR(table(fit.network, "X")[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(table(fit.network, "X")[1], 1.0 / 3.0, 1e-15);
    EXPECT_TRUE(fit.warnings.empty());
}

TEST(LearnParameters, EmptyConfigurationWithoutSmoothing) {
    Dataset d;
    d.columns = {Variable::discrete("A", {"a1", "a2"}), Variable::discrete("B", {"b1", "b2"})};
    d.rows = {{0, 0}, {0, 1}, {0, 1}};
    Dag dag = empty_dag(d.columns);
    dag.parents[1] = {0};
    const auto fit = learn_parameters(dag, d, {.dirichlet_alpha = 0.0});
    EXPECT_EQ(table(fit.network, "B"), (std::vector<double>{1.0 / 3.0, 2.0 / 3.0, 0.5, 0.5}));
    ASSERT_EQ(fit.warnings.size(), 1u);
    EXPECT_NE(fit.warnings[0].find("B"), std::string::npos);
}

TEST(LearnParameters, RecoversScriptOne) {
    const auto net = script1();
    const auto data = inference::sample_forward(net, 100000, 11);
    const auto fit = learn_parameters(net.dag(), data).network;
    EXPECT_LE(max_param_error(fit, net), 0.01);
    EXPECT_NEAR(table(fit, "Haemorrhage")[0], 0.9, 0.01);
    EXPECT_EQ(fit.arcs(), net.arcs());
}

TEST(LearnParameters, RecoversScriptTwo) {
    const auto net = script2();
    const auto data = inference::sample_forward(net, 100000, 11);
    const auto fit = learn_parameters(net.dag(), data).network;
    EXPECT_NEAR(table(fit, "EbolaVirusDisease")[0], 0.1, 0.01);
    const auto& fever = std::get<ClgSpec>(fit.cpd(fit.require_index("Fever")));
    EXPECT_NEAR(fever.components[0].intercept, 103.0, 0.05);
    EXPECT_NEAR(fever.components[1].intercept, 98.6, 0.05);
    EXPECT_NEAR(fever.components[0].variance, 1.0, 0.1);
    EXPECT_NEAR(fever.components[1].variance, 1.0, 0.05);
}

TEST(LearnParameters, LinearGaussianMatchesClosedFormRegression) {
    // Simple regression oracle: slope = cov(x, y) / var(x), intercept = ybar - slope * xbar,
    // variance = mean squared residual.
    std::mt19937_64 rng(31);
    std::normal_distribution<double> x_dist(2.0, 1.5), noise(0.0, 0.7);
    Dataset d;
    d.columns = {Variable::continuous("X"), Variable::continuous("Y")};
    for (int i = 0; i < 500; ++i) {
        const double x = x_dist(rng);
        d.rows.push_back({x, -1.0 + 2.5 * x + noise(rng)});
    }
    double xbar = 0, ybar = 0;
    for (const auto& r : d.rows) {
        xbar += r[0] / 500.0;
        ybar += r[1] / 500.0;
    }
    double sxy = 0, sxx = 0;
    for (const auto& r : d.rows) {
        sxy += (r[0] - xbar) * (r[1] - ybar);
        sxx += (r[0] - xbar) * (r[0] - xbar);
    }
    const double slope = sxy / sxx, intercept = ybar - slope * xbar;
    double rss = 0;
    for (const auto& r : d.rows) rss += std::pow(r[1] - intercept - slope * r[0], 2);

    Dag dag = empty_dag(d.columns);
    dag.parents[1] = {0};
    const auto fit = learn_parameters(dag, d).network;
    const auto& y = std::get<ClgSpec>(fit.cpd(1));
    ASSERT_EQ(y.continuous_parents, (std::vector<std::size_t>{0}));
    EXPECT_NEAR(y.components[0].coefficients[0], slope, 1e-9);
    EXPECT_NEAR(y.components[0].intercept, intercept, 1e-9);
    EXPECT_NEAR(y.components[0].variance, rss / 500.0, 1e-9);
    const auto& x = std::get<ClgSpec>(fit.cpd(0));
    EXPECT_NEAR(x.components[0].intercept, xbar, 1e-9);
}

TEST(LearnParameters, Rejections) {
    const auto net = script1();
    const auto data = inference::sample_forward(net, 10, 1);
    EXPECT_EQ(error_of([&] { learn_parameters(net.dag(), data, {.dirichlet_alpha = -1.0}); }), ErrorCode::InvalidParams);
    EXPECT_EQ(error_of([&] { learn_parameters(net.dag(), Dataset{data.columns, {}}); }), ErrorCode::EmptyDataset);
    Dag cyclic = net.dag();
    cyclic.parents[0] = {1};
    EXPECT_EQ(error_of([&] { learn_parameters(cyclic, data); }), ErrorCode::CycleError);
    Dag extra = net.dag();
    extra.variables.push_back(Variable::discrete("Missing", {"m0", "m1"}));
    extra.parents.push_back({});
    EXPECT_EQ(error_of([&] { learn_parameters(extra, data); }), ErrorCode::DataError);
}

TEST(LearnParametersProperty, RowsSumToOne) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> alpha(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = oracle::random_discrete_net(rng, {.max_vars = 5, .zeros = true});
        const auto n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
        const auto data = inference::sample_forward(net, n, trial);
        const double a = trial % 4 == 0 ? 0.0 : alpha(rng);
        const auto fit = learn_parameters(net.dag(), data, {.dirichlet_alpha = a}).network;
        for (std::size_t v = 0; v < fit.size(); ++v) {
            const auto& t = std::get<DiscreteTable>(fit.cpd(v));
            const auto k = fit.variable(v).cardinality();
            for (std::size_t r = 0; r * k < t.probabilities.size(); ++r) {
                double sum = 0.0;
                for (std::size_t s = 0; s < k; ++s) sum += t.probabilities[r * k + s];
                ASSERT_NEAR(sum, 1.0, 1e-12);
            }
        }
    }
}

TEST(LearnParametersProperty, ErrorShrinksWithSampleSize) {
    // Averaged over a fixed family of seeds; a single draw can fluctuate upward.
    const auto net = script1();
    double previous = INFINITY;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
        double mean_error = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto fit = learn_parameters(net.dag(), inference::sample_forward(net, n, seed)).network;
            mean_error += max_param_error(fit, net) / 10.0;
        }
        ASSERT_LE(mean_error, previous) << "n " << n;
        previous = mean_error;
    }
}

TEST(Bic, ChainBeatsEmpty) {
    const auto chain = strong_pair();
    const auto data = inference::sample_forward(chain, 10000, 41);
    const auto fitted_chain = learn_parameters(chain.dag(), data).network;
    const auto fitted_empty = learn_parameters(empty_dag(chain.variables()), data).network;
    EXPECT_GT(bic_score(fitted_chain, data).total, bic_score(fitted_empty, data).total);
    EXPECT_EQ(bic_score(fitted_chain, data).total, bic_score(fitted_chain, data).total);
    EXPECT_EQ(error_of([&] { bic_score(chain, Dataset{data.columns, {}}); }), ErrorCode::EmptyDataset);
}

TEST(BicProperty, DecomposableAndMatchesRowwiseOracle) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const auto net = oracle::random_discrete_net(rng, {.max_vars = 5});
        const auto data = inference::sample_forward(net, 300, trial + 1);
        const auto score = bic_score(net, data);
        double sum = 0.0;
        for (double f : score.families) sum += f;
        ASSERT_NEAR(score.total, sum, 1e-9);
        ASSERT_NEAR(score.total, bic_oracle(net, data), 1e-7);
    }
}

TEST(BicProperty, StructureScoreIsBicAtMaximumLikelihood) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const auto net = oracle::random_discrete_net(rng, {.max_vars = 4});
        const auto data = inference::sample_forward(net, 5000, trial + 1);
        const auto fit = learn_parameters(net.dag(), data, {.dirichlet_alpha = 0.0});
        if (!fit.warnings.empty()) continue;
        ASSERT_NEAR(structure_score(net.dag(), data), bic_oracle(fit.network, data), 1e-6);
    }
}

TEST(LearnStructure, RecoversStrongDependence) {
    const auto data = inference::sample_forward(strong_pair(), 20000, 51);
    const auto result = learn_structure(data);
    const auto arcs = result.network.arcs();
    ASSERT_EQ(arcs.size(), 1u);
    const auto& arc = *arcs.begin();
    EXPECT_EQ(std::set<std::string>({arc.first, arc.second}), (std::set<std::string>{"A", "B"}));
    EXPECT_NEAR(result.score, structure_score(result.network.dag(), data), 1e-9);
    EXPECT_TRUE(validate(result.network).ok());
}

TEST(LearnStructure, IndependentColumnsGiveNoArcs) {
    const auto result = learn_structure(independent_uniform(20000, 52));
    EXPECT_TRUE(result.network.arcs().empty());
}

TEST(LearnStructure, MoreRestartsNeverScoreWorse) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = oracle::random_discrete_net(rng, {.max_vars = 6, .min_vars = 4});
        const auto data = inference::sample_forward(net, 2000, trial + 1);
        const auto one = learn_structure(data, {.restarts = 1, .seed = 9});
        const auto five = learn_structure(data, {.restarts = 5, .seed = 9});
        ASSERT_GE(five.score, one.score);
    }
}

TEST(LearnStructure, DeterministicGivenSeed) {
    const auto data = inference::sample_forward(script1(), 3000, 54);
    EXPECT_EQ(learn_structure(data, {.seed = 3}).network, learn_structure(data, {.seed = 3}).network);
}

TEST(LearnStructure, Rejections) {
    Dataset one;
    one.columns = {Variable::discrete("X", {"a", "b"})};
    one.rows = {{0.0}};
    EXPECT_EQ(error_of([&] { learn_structure(one); }), ErrorCode::TooFewColumns);
    EXPECT_EQ(error_of([&] { learn_structure(Dataset{independent_uniform(1, 1).columns, {}}); }), ErrorCode::EmptyDataset);
    EXPECT_EQ(error_of([&] { learn_structure(inference::sample_forward(script2(), 100, 1)); }),
              ErrorCode::ContinuousVariablesPresent);
}

TEST(LearnStructureProperty, AcyclicBoundedAndNoWorseThanEmpty) {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 40; ++trial) {
        const auto net = oracle::random_discrete_net(rng, {.max_vars = 6, .min_vars = 2});
        const auto data = inference::sample_forward(net, 1000, trial + 1);
        const std::size_t max_parents = 1 + trial % 3;
        const auto result = learn_structure(data, {.max_parents = max_parents, .restarts = 2, .seed = 7});
        const auto dag = result.network.dag();
        ASSERT_TRUE(dag.find_cycle().empty());
        for (const auto& ps : dag.parents) ASSERT_LE(ps.size(), max_parents);
        ASSERT_GE(result.score, structure_score(empty_dag(data.columns), data) - 1e-9);
    }
}
