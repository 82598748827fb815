#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bayescloud/dataset.hpp"
#include "bayescloud/network.hpp"

namespace bayescloud::learning {

struct LearnOptions {
    double dirichlet_alpha = 1.0;
    std::size_t max_parents = 3;
    std::size_t restarts = 5;
    std::uint64_t seed = 1;
};

struct ParameterFit {
    BayesianNetwork network;
    std::vector<std::string> warnings;
};

/// Discrete rows (count + alpha) / (total + alpha * |states|); CLG components by
/// least squares on the continuous parents per discrete configuration, variance
/// = residual variance floored at 1e-9.
ParameterFit learn_parameters(const Dag& structure, const Dataset& data, const LearnOptions& options = {});

/// Per-family log-likelihood minus (free parameters / 2) * ln(rows).
struct BicScore {
    double total = 0.0;
    std::vector<double> families;  // aligned with the network's variables
};

BicScore bic_score(const BayesianNetwork& net, const Dataset& data);

/// BIC with maximum-likelihood parameters for a discrete structure; the score
/// hill climbing optimizes.
double structure_score(const Dag& structure, const Dataset& data);

struct StructureResult {
    BayesianNetwork network;
    double score = 0.0;  // structure_score of the returned graph
    std::vector<std::string> warnings;
};

/// Greedy hill climbing over add / delete / reverse moves with seeded random
/// restarts. All-discrete data only.
StructureResult learn_structure(const Dataset& data, const LearnOptions& options = {});

}  // namespace bayescloud::learning
