#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "bayescloud/bnscript.hpp"
#include "bayescloud/dataset.hpp"
#include "bayescloud/network.hpp"

namespace bayescloud::inference {

struct Categorical {
    std::vector<std::string> states;
    std::vector<double> probabilities;
    bool operator==(const Categorical&) const = default;
};

struct MixtureComponent {
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    bool operator==(const MixtureComponent&) const = default;
};

struct GaussianMixture {
    std::vector<MixtureComponent> components;
    double mean() const;
    bool operator==(const GaussianMixture&) const = default;
};

struct Marginal {
    std::string variable;
    std::variant<Categorical, GaussianMixture> distribution;
    bool operator==(const Marginal&) const = default;
};

/// One entry per queried variable, in query order.
using Marginals = std::vector<Marginal>;

/// Evidence resolved against a network: one optional value per variable.
using BoundEvidence = std::vector<std::optional<double>>;

/// Throws UnknownVariable / UnknownState on names or values the network does not know.
BoundEvidence bind_evidence(const BayesianNetwork& net, const script::Evidence& evidence);

/// Exact posteriors by variable elimination (min-degree order, ties broken by name).
/// Requires an all-discrete network; throws ZeroProbabilityEvidence when P(e) is 0.
Marginals eliminate(const BayesianNetwork& net, const script::Evidence& evidence,
                    const std::vector<std::string>& query);

/// Same as eliminate, with the hidden variables summed out in `order`
/// (names; must list every non-query, non-evidence variable).
Marginals eliminate(const BayesianNetwork& net, const script::Evidence& evidence,
                    const std::vector<std::string>& query, const std::vector<std::string>& order);

/// log P(e) for an all-discrete network; -inf when the evidence is impossible.
double log_evidence_probability(const BayesianNetwork& net, const script::Evidence& evidence);

/// True when every continuous variable has only discrete parents and no children.
bool is_clg_leaf_network(const BayesianNetwork& net);

/// Exact inference for networks whose continuous variables are all leaves.
/// Observed leaves enter as Gaussian likelihood factors on their discrete
/// parents; unobserved continuous queries come back as mixtures.
Marginals infer_clg_leaf(const BayesianNetwork& net, const script::Evidence& evidence,
                         const std::vector<std::string>& query);

/// Ancestral sampling; deterministic given the seed.
Dataset sample_forward(const BayesianNetwork& net, std::size_t n, std::uint64_t seed);

struct GibbsOptions {
    std::size_t samples = 50000;  // total sweeps, burn-in included
    std::size_t burn_in = 5000;
    std::uint64_t seed = 1;
    std::size_t max_restarts = 1000;
};

/// Gibbs sampling over the unobserved variables. Discrete variables draw from
/// their normalized full conditional, continuous ones from the closed-form
/// Gaussian full conditional. Continuous queries are reported as one
/// moment-matched component per discrete-parent configuration visited.
Marginals gibbs_query(const BayesianNetwork& net, const script::Evidence& evidence,
                      const std::vector<std::string>& query, const GibbsOptions& options = {});

/// Reusable single-site Gibbs kernel over one network.
class GibbsSampler {
public:
    /// Throws UnsupportedNetwork when a discrete variable has a continuous parent.
    explicit GibbsSampler(const BayesianNetwork& net);

    /// Forward-samples the unobserved variables with evidence clamped until the
    /// state has positive probability. Throws ZeroProbabilityEvidence after
    /// `max_restarts` failures.
    Assignment initialize(const BoundEvidence& evidence, std::mt19937_64& rng, std::size_t max_restarts = 1000) const;

    /// One pass over every unobserved variable in topological order.
    void sweep(Assignment& state, const BoundEvidence& evidence, std::mt19937_64& rng) const;

    const BayesianNetwork& network() const noexcept { return net_; }

private:
    const BayesianNetwork& net_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::size_t>> children_;
};

/// Draws one value for `var` from its CPD given the parent values in `a`.
void sample_variable(const BayesianNetwork& net, std::size_t var, Assignment& a, std::mt19937_64& rng);

enum class Method { Auto, Exact, Gibbs };

struct InferOptions {
    Method method = Method::Auto;
    GibbsOptions gibbs;
};

/// Exact when the network allows it (all-discrete or CLG leaves), Gibbs otherwise.
/// An empty query means every variable.
Marginals infer(const BayesianNetwork& net, const script::Evidence& evidence, std::vector<std::string> query,
                const InferOptions& options = {});

}  // namespace bayescloud::inference
