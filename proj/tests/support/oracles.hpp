#pragma once

// Independent reference computations and hand-rolled generators shared by the
// unit and acceptance tests. Nothing here calls the inference module.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bayescloud/bnscript.hpp"
#include "bayescloud/network.hpp"

namespace oracle {

using bayescloud::Assignment;
using bayescloud::BayesianNetwork;
using bayescloud::DiscreteTable;
using bayescloud::Variable;

inline std::string fixture(const std::string& name) { return std::string(BAYESCLOUD_FIXTURE_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bayescloud::script::Evidence ev(std::map<std::string, bayescloud::script::EvidenceValue> m) {
    return {std::move(m)};
}

inline double normal_pdf(double x, double mean, double variance) {
    const double pi = 3.14159265358979323846;
    return std::exp(-(x - mean) * (x - mean) / (2.0 * variance)) / std::sqrt(2.0 * pi * variance);
}

/// Product of table entries for a full discrete assignment, computed directly from the CPTs.
inline double table_product(const BayesianNetwork& net, const std::vector<std::size_t>& states) {
    double p = 1.0;
    for (std::size_t v = 0; v < net.size(); ++v) {
        const auto& t = std::get<DiscreteTable>(net.cpd(v));
        std::size_t row = 0;
        for (auto parent : t.parents) row = row * net.variable(parent).cardinality() + states[parent];
        p *= t.probabilities[row * net.variable(v).cardinality() + states[v]];
    }
    return p;
}

/// Calls f(states) for every full assignment of an all-discrete network.
template <typename F>
void for_each_assignment(const std::vector<std::size_t>& cards, F&& f) {
    std::vector<std::size_t> s(cards.size(), 0);
    while (true) {
        f(s);
        std::size_t k = cards.size();
        for (; k > 0; --k) {
            if (++s[k - 1] < cards[k - 1]) break;
            s[k - 1] = 0;
        }
        if (k == 0) return;
    }
}

inline std::vector<std::size_t> cards_of(const BayesianNetwork& net) {
    std::vector<std::size_t> c;
    for (const auto& v : net.variables()) c.push_back(v.cardinality());
    return c;
}

/// Brute-force P(var | evidence) by summing the full joint. Returns an empty
/// vector when the evidence has zero mass.
inline std::vector<double> enumerate_posterior(const BayesianNetwork& net, const std::map<std::size_t, std::size_t>& ev,
                                               std::size_t var) {
    std::vector<double> out(net.variable(var).cardinality(), 0.0);
    double total = 0.0;
    for_each_assignment(cards_of(net), [&](const std::vector<std::size_t>& s) {
        for (const auto& [v, st] : ev) {
            if (s[v] != st) return;
        }
        const double p = table_product(net, s);
        out[s[var]] += p;
        total += p;
    });
    if (total <= 0.0) return {};
    for (auto& p : out) p /= total;
    return out;
}

/// Joint of `net` laid out over `vars` (names and state order taken from `vars`).
/// `vars` must cover every variable of `net`; see marginal_over for subsets.
inline std::vector<double> joint_over(const BayesianNetwork& net, const std::vector<Variable>& vars) {
    std::vector<std::size_t> cards;
    std::vector<std::size_t> index;
    for (const auto& v : vars) {
        cards.push_back(v.cardinality());
        index.push_back(net.require_index(v.name));
    }
    std::vector<double> out;
    for_each_assignment(cards, [&](const std::vector<std::size_t>& s) {
        std::vector<std::size_t> own(net.size(), 0);
        for (std::size_t k = 0; k < vars.size(); ++k) own[index[k]] = *net.variable(index[k]).state_index(vars[k].states[s[k]]);
        out.push_back(table_product(net, own));
    });
    return out;
}

/// Marginal of `net` over a subset `vars` by summing the full joint.
inline std::vector<double> marginal_over(const BayesianNetwork& net, const std::vector<Variable>& vars) {
    std::vector<std::size_t> index;
    std::vector<std::vector<std::size_t>> remap;
    std::size_t size = 1;
    for (const auto& v : vars) {
        index.push_back(net.require_index(v.name));
        std::vector<std::size_t> r(v.cardinality());
        for (std::size_t s = 0; s < v.cardinality(); ++s) r[*net.variable(index.back()).state_index(v.states[s])] = s;
        remap.push_back(r);
        size *= v.cardinality();
    }
    std::vector<double> out(size, 0.0);
    for_each_assignment(cards_of(net), [&](const std::vector<std::size_t>& s) {
        std::size_t cell = 0;
        for (std::size_t k = 0; k < vars.size(); ++k) cell = cell * vars[k].cardinality() + remap[k][s[index[k]]];
        out[cell] += table_product(net, s);
    });
    return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Random probability row; with `zeros`, entries are occasionally exactly 0.
inline std::vector<double> random_row(std::mt19937_64& rng, std::size_t k, bool zeros) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::bernoulli_distribution drop(0.15);
    std::vector<double> row(k);
    double sum = 0.0;
    for (auto& x : row) {
        x = (zeros && drop(rng)) ? 0.0 : u(rng);
        sum += x;
    }
    if (sum == 0.0) {
        row[0] = 1.0;
        sum = 1.0;
    }
    for (auto& x : row) x /= sum;
    return row;
}

struct NetSpec {
    std::size_t max_vars = 6;
    std::size_t min_vars = 1;
    std::size_t max_states = 3;
    std::size_t max_parents = 3;
    bool zeros = false;
    std::string prefix = "V";
};

/// Random all-discrete network; parents are always earlier variables.
inline BayesianNetwork random_discrete_net(std::mt19937_64& rng, const NetSpec& spec = {}) {
    std::uniform_int_distribution<std::size_t> nvars(spec.min_vars, spec.max_vars);
    std::uniform_int_distribution<std::size_t> nstates(2, spec.max_states);
    const auto n = nvars(rng);
    BayesianNetwork net;
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::string> states;
        const auto k = nstates(rng);
        for (std::size_t s = 0; s < k; ++s) states.push_back("s" + std::to_string(s));
        net.add_variable(Variable::discrete(spec.prefix + std::to_string(v), states));
    }
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::size_t> candidates;
        for (std::size_t p = 0; p < v; ++p) candidates.push_back(p);
        std::shuffle(candidates.begin(), candidates.end(), rng);
        std::uniform_int_distribution<std::size_t> np(0, std::min(spec.max_parents, candidates.size()));
        candidates.resize(np(rng));
        std::sort(candidates.begin(), candidates.end());
        std::size_t rows = 1;
        for (auto p : candidates) rows *= net.variable(p).cardinality();
        std::vector<double> probs;
        for (std::size_t r = 0; r < rows; ++r) {
            for (double x : random_row(rng, net.variable(v).cardinality(), spec.zeros)) probs.push_back(x);
        }
        net.set_cpd(v, DiscreteTable{candidates, probs});
    }
    return net;
}

inline double mutual_information(const std::vector<double>& joint, std::size_t ka, std::size_t kb) {
    std::vector<double> pa(ka, 0.0), pb(kb, 0.0);
    for (std::size_t i = 0; i < ka; ++i) {
        for (std::size_t j = 0; j < kb; ++j) {
            pa[i] += joint[i * kb + j];
            pb[j] += joint[i * kb + j];
        }
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < ka; ++i) {
        for (std::size_t j = 0; j < kb; ++j) {
            const double p = joint[i * kb + j];
            if (p > 0.0) mi += p * std::log(p / (pa[i] * pb[j]));
        }
    }
    return mi;
}

// Pairwise joint of two variables by brute-force enumeration of the whole network.
inline std::vector<double> pair_joint(const BayesianNetwork& net, std::size_t a, std::size_t b) {
    const auto ka = net.variable(a).cardinality(), kb = net.variable(b).cardinality();
    std::vector<double> out(ka * kb, 0.0);
    for_each_assignment(cards_of(net), [&](const std::vector<std::size_t>& s) {
        out[s[a] * kb + s[b]] += table_product(net, s);
    });
    return out;
}

// Objective at q(a1) = x for the single-shared-node conflict, evaluated directly.
inline double conflict_objective(double x, double p1, double p2) {
    auto kl = [](double q, double p) { return (q > 0.0 ? q * std::log(q / p) : 0.0); };
    return kl(x, p1) + kl(1.0 - x, 1.0 - p1) + kl(x, p2) + kl(1.0 - x, 1.0 - p2);
}

/// Up to max_observed variables clamped to uniformly drawn states.
inline std::map<std::size_t, std::size_t> random_evidence(std::mt19937_64& rng, const BayesianNetwork& net,
                                                          std::size_t max_observed) {
    std::map<std::size_t, std::size_t> ev;
    const auto n = std::uniform_int_distribution<std::size_t>(0, std::min(max_observed, net.size()))(rng);
    std::vector<std::size_t> vars(net.size());
    for (std::size_t i = 0; i < vars.size(); ++i) vars[i] = i;
    std::shuffle(vars.begin(), vars.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
        ev[vars[i]] = std::uniform_int_distribution<std::size_t>(0, net.variable(vars[i]).cardinality() - 1)(rng);
    }
    return ev;
}

inline bayescloud::script::Evidence named(const BayesianNetwork& net, const std::map<std::size_t, std::size_t>& ev) {
    bayescloud::script::Evidence out;
    for (const auto& [v, s] : ev) out.assignments[net.variable(v).name] = net.variable(v).states[s];
    return out;
}

}  // namespace oracle
