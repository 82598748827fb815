#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bayescloud/network.hpp"

namespace bayescloud::integration {

enum class MergeMethod { Disjoint, Optimize, Simulate };

std::string_view to_string(MergeMethod m);
/// Accepts "disjoint", "optimize", "simulate"; throws InvalidRequest otherwise.
MergeMethod parse_method(std::string_view text);

struct MergeOptions {
    double tolerance = 1e-6;
    std::size_t max_iterations = 10000;
    std::size_t sample_count = 50000;
    std::uint64_t seed = 1;
    /// Upper bound on the dense joint state space used by the optimizer.
    std::size_t max_joint_states = std::size_t{1} << 22;
    /// Gibbs sweeps per conditioned row when the shared variables are not upstream.
    std::size_t gibbs_sweeps = 25;
};

struct MergeReport {
    std::vector<std::string> shared;
    MergeMethod method = MergeMethod::Disjoint;
    std::optional<double> objective;
    std::size_t iterations = 0;
    std::optional<std::size_t> sample_count;
    std::size_t rejected_samples = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct MergeResult {
    BayesianNetwork network;
    MergeReport report;
};

/// Names present in both networks, in bn1 order. Throws DomainMismatch when a
/// shared name differs in kind or state set.
std::vector<std::string> shared_variables(const BayesianNetwork& bn1, const BayesianNetwork& bn2);

/// Variables of bn1 then the bn2-only variables; parents are the union of the
/// sources' parents. Throws CycleInUnion (with the cycle) when the union is cyclic.
Dag union_structure(const BayesianNetwork& bn1, const BayesianNetwork& bn2);

/// Disconnected union; throws SharedVariablesPresent.
MergeResult merge_disjoint(const BayesianNetwork& bn1, const BayesianNetwork& bn2);

/// Joint over the union product space minimizing KL(q|V1 || P1) + KL(q|V2 || P2)
/// by exponentiated-gradient descent, then CPDs rebuilt on the arc union.
MergeResult merge_optimize(const BayesianNetwork& bn1, const BayesianNetwork& bn2, const MergeOptions& options = {});

/// Pick a source with a fair coin, sample it, sample the other conditioned on
/// the shared values, repeat; then fit CPDs on the arc union (Dirichlet alpha = 1).
MergeResult merge_simulate(const BayesianNetwork& bn1, const BayesianNetwork& bn2, const MergeOptions& options = {});

/// Dispatches on `method`; Optimize and Simulate fall back to the disjoint
/// union (with a warning) when nothing is shared.
MergeResult merge(const BayesianNetwork& bn1, const BayesianNetwork& bn2, MergeMethod method,
                  const MergeOptions& options = {});

struct RebuildResult {
    BayesianNetwork network;
    std::vector<std::string> warnings;
};

/// CPDs q(X | Pa(X)) from a dense joint laid out over `structure.variables`
/// (first variable most significant). Zero-mass parent configurations get
/// uniform rows and a warning.
RebuildResult rebuild_cpds(const std::vector<double>& joint, const Dag& structure);

/// Dense joint of an all-discrete network in its variable order.
std::vector<double> joint_table(const BayesianNetwork& net);

/// KL(p || q) in nats for two dense distributions on the same space.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace bayescloud::integration
