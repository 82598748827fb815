#include "bayescloud/integration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "bayescloud/dataset.hpp"
#include "bayescloud/error.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/learning.hpp"

namespace bayescloud::integration {

using nlohmann::json;

std::string_view to_string(MergeMethod m) {
    switch (m) {
        case MergeMethod::Disjoint: return "disjoint";
        case MergeMethod::Optimize: return "optimize";
        case MergeMethod::Simulate: return "simulate";
    }
    return "disjoint";
}

MergeMethod parse_method(std::string_view text) {
    if (text == "disjoint") return MergeMethod::Disjoint;
    if (text == "optimize") return MergeMethod::Optimize;
    if (text == "simulate") return MergeMethod::Simulate;
    throw Error(ErrorCode::InvalidRequest, "unknown merge method '" + std::string(text) + "'",
                {{"expected", {"disjoint", "optimize", "simulate"}}});
}

json MergeReport::to_json() const {
    json j{{"shared", shared}, {"method", std::string(to_string(method))}, {"warnings", warnings}};
    j["objective"] = objective ? json(*objective) : json(nullptr);
    j["iterations"] = iterations;
    j["sample_count"] = sample_count ? json(*sample_count) : json(nullptr);
    j["rejected_samples"] = rejected_samples;
    return j;
}

namespace {

std::vector<std::size_t> remap(const std::vector<std::size_t>& xs, const std::vector<std::size_t>& map) {
    std::vector<std::size_t> out;
    out.reserve(xs.size());
    for (auto x : xs) out.push_back(map[x]);
    return out;
}

/// Copy of `cpd` with variable indices translated; `map` must be monotone so
/// sorted parent lists stay sorted and the table layout is unchanged.
Cpd remap_cpd(const Cpd& cpd, const std::vector<std::size_t>& map) {
    if (const auto* t = std::get_if<DiscreteTable>(&cpd)) return DiscreteTable{remap(t->parents, map), t->probabilities};
    const auto& g = std::get<ClgSpec>(cpd);
    return ClgSpec{remap(g.discrete_parents, map), remap(g.continuous_parents, map), g.components};
}

/// Decodes a configuration index into per-parent state indices (first parent most significant).
std::vector<std::size_t> decode(const std::vector<std::size_t>& cards, std::size_t index) {
    std::vector<std::size_t> digits(cards.size());
    for (std::size_t k = cards.size(); k-- > 0;) {
        digits[k] = index % cards[k];
        index /= cards[k];
    }
    return digits;
}

std::size_t encode(const std::vector<std::size_t>& cards, const std::vector<std::size_t>& digits) {
    std::size_t index = 0;
    for (std::size_t k = 0; k < cards.size(); ++k) index = index * cards[k] + digits[k];
    return index;
}

/// bn2 with every shared discrete variable's states reordered to bn1's order.
BayesianNetwork align_states(const BayesianNetwork& bn2, const BayesianNetwork& bn1) {
    const auto n = bn2.size();
    // perm[v][new_state] = old_state
    std::vector<std::vector<std::size_t>> perm(n);
    std::vector<Variable> vars = bn2.variables();
    bool any = false;
    for (std::size_t v = 0; v < n; ++v) {
        const auto& var = vars[v];
        perm[v].resize(var.cardinality());
        for (std::size_t s = 0; s < var.cardinality(); ++s) perm[v][s] = s;
        if (!var.is_discrete()) continue;
        auto i1 = bn1.index_of(var.name);
        if (!i1 || bn1.variable(*i1).states == var.states) continue;
        const auto& target = bn1.variable(*i1).states;
        for (std::size_t s = 0; s < target.size(); ++s) perm[v][s] = *var.state_index(target[s]);
        vars[v].states = target;
        any = true;
    }
    if (!any) return bn2;

    BayesianNetwork out;
    for (const auto& var : vars) out.add_variable(var);
    auto cards_of = [&](const std::vector<std::size_t>& ps) {
        std::vector<std::size_t> c;
        for (auto p : ps) c.push_back(vars[p].cardinality());
        return c;
    };
    auto old_config = [&](const std::vector<std::size_t>& ps, const std::vector<std::size_t>& cards, std::size_t c) {
        auto digits = decode(cards, c);
        for (std::size_t k = 0; k < ps.size(); ++k) digits[k] = perm[ps[k]][digits[k]];
        return encode(cards, digits);
    };
    for (std::size_t v = 0; v < n; ++v) {
        const auto& cpd = bn2.cpd(v);
        if (const auto* t = std::get_if<DiscreteTable>(&cpd)) {
            const auto cards = cards_of(t->parents);
            const auto k = vars[v].cardinality();
            const auto rows = t->probabilities.size() / k;
            DiscreteTable nt{t->parents, std::vector<double>(t->probabilities.size())};
            for (std::size_t c = 0; c < rows; ++c) {
                const auto oc = old_config(t->parents, cards, c);
                for (std::size_t s = 0; s < k; ++s) nt.probabilities[c * k + s] = t->probabilities[oc * k + perm[v][s]];
            }
            out.set_cpd(v, std::move(nt));
        } else {
            const auto& g = std::get<ClgSpec>(cpd);
            const auto cards = cards_of(g.discrete_parents);
            ClgSpec ng = g;
            for (std::size_t c = 0; c < g.components.size(); ++c) {
                ng.components[c] = g.components[old_config(g.discrete_parents, cards, c)];
            }
            out.set_cpd(v, std::move(ng));
        }
    }
    return out;
}

/// Index of each source variable inside the union variable list.
struct UnionLayout {
    Dag dag;
    std::vector<std::size_t> from1;  // bn1 index -> union index
    std::vector<std::size_t> from2;  // bn2 index -> union index
};

UnionLayout layout(const BayesianNetwork& bn1, const BayesianNetwork& bn2) {
    UnionLayout u;
    u.dag.variables = bn1.variables();
    u.from1.resize(bn1.size());
    for (std::size_t v = 0; v < bn1.size(); ++v) u.from1[v] = v;
    u.from2.resize(bn2.size());
    for (std::size_t v = 0; v < bn2.size(); ++v) {
        if (auto i = bn1.index_of(bn2.variable(v).name)) {
            u.from2[v] = *i;
        } else {
            u.from2[v] = u.dag.variables.size();
            u.dag.variables.push_back(bn2.variable(v));
        }
    }
    std::vector<std::set<std::size_t>> parents(u.dag.variables.size());
    for (std::size_t v = 0; v < bn1.size(); ++v) {
        for (auto p : bn1.parents(v)) parents[u.from1[v]].insert(u.from1[p]);
    }
    for (std::size_t v = 0; v < bn2.size(); ++v) {
        for (auto p : bn2.parents(v)) parents[u.from2[v]].insert(u.from2[p]);
    }
    for (auto& ps : parents) u.dag.parents.emplace_back(ps.begin(), ps.end());
    if (auto cycle = u.dag.find_cycle(); !cycle.empty()) {
        std::string path;
        for (const auto& name : cycle) path += (path.empty() ? "" : " -> ") + name;
        throw Error(ErrorCode::CycleInUnion, "union of the sources is cyclic: " + path, {{"cycle", cycle}});
    }
    return u;
}

std::size_t checked_product(const std::vector<Variable>& vars, std::size_t cap, const std::string& what) {
    std::size_t total = 1;
    for (const auto& v : vars) {
        if (v.cardinality() == 0 || total > cap / v.cardinality()) {
            throw Error(ErrorCode::StateSpaceTooLarge,
                        what + " joint state space exceeds the limit of " + std::to_string(cap) + " states",
                        {{"limit", cap}});
        }
        total *= v.cardinality();
    }
    return total;
}

void require_discrete(const BayesianNetwork& net, const char* label) {
    for (const auto& v : net.variables()) {
        if (!v.is_discrete()) {
            throw Error(ErrorCode::ContinuousVariablesPresent,
                        std::string(label) + " has continuous variable '" + v.name + "'; optimize needs all-discrete sources",
                        {{"variable", v.name}});
        }
    }
}

/// Joint objective pieces for the optimizer.
struct Projection {
    std::vector<std::size_t> to1;  // union index -> bn1 joint index
    std::vector<std::size_t> to2;
    std::size_t size1 = 0;
    std::size_t size2 = 0;
};

Projection project(const UnionLayout& u, const BayesianNetwork& bn1, const BayesianNetwork& bn2, std::size_t total) {
    const auto n = u.dag.variables.size();
    std::vector<std::size_t> stride1(n, 0), stride2(n, 0);
    Projection p;
    p.size1 = 1;
    for (std::size_t v = bn1.size(); v-- > 0;) {
        stride1[u.from1[v]] = p.size1;
        p.size1 *= bn1.variable(v).cardinality();
    }
    p.size2 = 1;
    for (std::size_t v = bn2.size(); v-- > 0;) {
        stride2[u.from2[v]] = p.size2;
        p.size2 *= bn2.variable(v).cardinality();
    }
    p.to1.resize(total);
    p.to2.resize(total);
    std::vector<std::size_t> digit(n, 0);
    std::size_t i1 = 0, i2 = 0;
    for (std::size_t i = 0; i < total; ++i) {
        p.to1[i] = i1;
        p.to2[i] = i2;
        for (std::size_t k = n; k-- > 0;) {
            const auto card = u.dag.variables[k].cardinality();
            if (++digit[k] < card) {
                i1 += stride1[k];
                i2 += stride2[k];
                break;
            }
            i1 -= stride1[k] * (card - 1);
            i2 -= stride2[k] * (card - 1);
            digit[k] = 0;
        }
    }
    return p;
}

double xlogx_ratio(double q, double p) { return q > 0.0 ? q * std::log(q / p) : 0.0; }

struct Objective {
    const Projection& proj;
    const std::vector<double>& p1;
    const std::vector<double>& p2;
    const std::vector<std::size_t>& support;
    std::vector<double> q1, q2;

    double value(const std::vector<double>& q) {
        q1.assign(proj.size1, 0.0);
        q2.assign(proj.size2, 0.0);
        for (auto i : support) {
            q1[proj.to1[i]] += q[i];
            q2[proj.to2[i]] += q[i];
        }
        double f = 0.0;
        for (std::size_t j = 0; j < q1.size(); ++j) f += xlogx_ratio(q1[j], p1[j]);
        for (std::size_t j = 0; j < q2.size(); ++j) f += xlogx_ratio(q2[j], p2[j]);
        return f;
    }
};

}  // namespace

std::vector<std::string> shared_variables(const BayesianNetwork& bn1, const BayesianNetwork& bn2) {
    std::vector<std::string> out;
    for (const auto& v : bn1.variables()) {
        auto j = bn2.index_of(v.name);
        if (!j) continue;
        const auto& w = bn2.variable(*j);
        if (!v.same_domain(w)) {
            throw Error(ErrorCode::DomainMismatch, "shared variable '" + v.name + "' has different domains in the sources",
                        {{"variable", v.name}, {"bn1_states", v.states}, {"bn2_states", w.states},
                         {"bn1_continuous", !v.is_discrete()}, {"bn2_continuous", !w.is_discrete()}});
        }
        out.push_back(v.name);
    }
    return out;
}

Dag union_structure(const BayesianNetwork& bn1, const BayesianNetwork& bn2) {
    shared_variables(bn1, bn2);
    return layout(bn1, align_states(bn2, bn1)).dag;
}

MergeResult merge_disjoint(const BayesianNetwork& bn1, const BayesianNetwork& bn2) {
    auto shared = shared_variables(bn1, bn2);
    if (!shared.empty()) {
        throw Error(ErrorCode::SharedVariablesPresent, "disjoint merge requires sources without shared variables",
                    {{"shared", shared}});
    }
    BayesianNetwork out;
    for (const auto& v : bn1.variables()) out.add_variable(v);
    for (const auto& v : bn2.variables()) out.add_variable(v);
    std::vector<std::size_t> id1(bn1.size()), id2(bn2.size());
    for (std::size_t v = 0; v < bn1.size(); ++v) id1[v] = v;
    for (std::size_t v = 0; v < bn2.size(); ++v) id2[v] = bn1.size() + v;
    for (std::size_t v = 0; v < bn1.size(); ++v) out.set_cpd(id1[v], remap_cpd(bn1.cpd(v), id1));
    for (std::size_t v = 0; v < bn2.size(); ++v) out.set_cpd(id2[v], remap_cpd(bn2.cpd(v), id2));
    MergeResult r{std::move(out), {}};
    r.report.method = MergeMethod::Disjoint;
    return r;
}

std::vector<double> joint_table(const BayesianNetwork& net) {
    for (const auto& v : net.variables()) {
        if (!v.is_discrete()) {
            throw Error(ErrorCode::ContinuousVariablesPresent, "joint table needs an all-discrete network",
                        {{"variable", v.name}});
        }
    }
    const auto total = checked_product(net.variables(), std::numeric_limits<std::size_t>::max() / 2, "network");
    std::vector<double> out(total);
    const auto n = net.size();
    Assignment a(n, 0.0);
    for (std::size_t i = 0; i < total; ++i) {
        out[i] = joint_probability(net, a);
        for (std::size_t k = n; k-- > 0;) {
            if (++a[k] < static_cast<double>(net.variable(k).cardinality())) break;
            a[k] = 0.0;
        }
    }
    return out;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw Error(ErrorCode::InvalidRequest, "distributions differ in size");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

RebuildResult rebuild_cpds(const std::vector<double>& joint, const Dag& structure) {
    const auto n = structure.variables.size();
    for (const auto& v : structure.variables) {
        if (!v.is_discrete()) {
            throw Error(ErrorCode::ContinuousVariablesPresent, "CPD rebuild needs an all-discrete structure",
                        {{"variable", v.name}});
        }
    }
    std::size_t total = 1;
    for (const auto& v : structure.variables) total *= v.cardinality();
    if (joint.size() != total) throw Error(ErrorCode::InvalidRequest, "joint size does not match the structure");

    // family[v] = parents then v; stride of each union variable inside the family table
    std::vector<std::vector<std::size_t>> fam_stride(n, std::vector<std::size_t>(n, 0));
    std::vector<std::vector<double>> mass(n);
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t s = structure.variables[v].cardinality();
        fam_stride[v][v] = 1;
        for (std::size_t k = structure.parents[v].size(); k-- > 0;) {
            const auto p = structure.parents[v][k];
            fam_stride[v][p] = s;
            s *= structure.variables[p].cardinality();
        }
        mass[v].assign(s, 0.0);
    }
    std::vector<std::size_t> digit(n, 0);
    std::vector<std::size_t> fam(n, 0);
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t v = 0; v < n; ++v) mass[v][fam[v]] += joint[i];
        for (std::size_t k = n; k-- > 0;) {
            const auto card = structure.variables[k].cardinality();
            if (++digit[k] < card) {
                for (std::size_t v = 0; v < n; ++v) fam[v] += fam_stride[v][k];
                break;
            }
            for (std::size_t v = 0; v < n; ++v) fam[v] -= fam_stride[v][k] * (card - 1);
            digit[k] = 0;
        }
    }

    RebuildResult r;
    for (const auto& v : structure.variables) r.network.add_variable(v);
    for (std::size_t v = 0; v < n; ++v) {
        const auto k = structure.variables[v].cardinality();
        auto& table = mass[v];
        for (std::size_t c = 0; c * k < table.size(); ++c) {
            double sum = 0.0;
            for (std::size_t s = 0; s < k; ++s) sum += table[c * k + s];
            if (sum > 0.0) {
                for (std::size_t s = 0; s < k; ++s) table[c * k + s] /= sum;
            } else {
                for (std::size_t s = 0; s < k; ++s) table[c * k + s] = 1.0 / static_cast<double>(k);
                r.warnings.push_back("uniform row for '" + structure.variables[v].name + "' under zero-mass configuration " +
                                     std::to_string(c));
            }
        }
        r.network.set_cpd(v, DiscreteTable{structure.parents[v], std::move(table)});
    }
    // Name the configurations now that the network exists.
    for (auto& w : r.warnings) {
        auto pos = w.find("configuration ");
        auto quote = w.find('\'');
        auto name = w.substr(quote + 1, w.find('\'', quote + 1) - quote - 1);
        const auto v = *r.network.index_of(name);
        const auto c = std::stoul(w.substr(pos + 14));
        w = w.substr(0, pos) + "configuration " + describe_configuration(r.network, structure.parents[v], c);
    }
    return r;
}

MergeResult merge_optimize(const BayesianNetwork& bn1, const BayesianNetwork& bn2, const MergeOptions& options) {
    require_discrete(bn1, "bn1");
    require_discrete(bn2, "bn2");
    auto shared = shared_variables(bn1, bn2);
    if (shared.empty()) throw Error(ErrorCode::NoSharedVariables, "optimize merge needs at least one shared variable");
    const auto aligned = align_states(bn2, bn1);
    const auto u = layout(bn1, aligned);
    const auto total = checked_product(u.dag.variables, options.max_joint_states, "union");

    const auto p1 = joint_table(bn1);
    const auto p2 = joint_table(aligned);
    const auto proj = project(u, bn1, aligned, total);

    std::vector<std::size_t> support;
    std::vector<double> q(total, 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        const double a = p1[proj.to1[i]], b = p2[proj.to2[i]];
        if (a > 0.0 && b > 0.0) {
            support.push_back(i);
            q[i] = std::sqrt(a * b);
            z += q[i];
        }
    }
    if (support.empty()) {
        throw Error(ErrorCode::NotConverged, "the sources share no joint configuration with positive probability",
                    {{"shared", shared}});
    }
    for (auto i : support) q[i] /= z;

    Objective obj{proj, p1, p2, support, {}, {}};
    double f = obj.value(q);
    std::vector<double> g(total, 0.0), trial(total, 0.0);
    double eta = 1.0;
    std::size_t iterations = 0;
    bool converged = false;
    double last_improvement = std::numeric_limits<double>::infinity();

    while (true) {
        // Gradient of the objective at q, restricted to the support.
        double g_min = std::numeric_limits<double>::infinity();
        double qg = 0.0;
        for (auto i : support) {
            g[i] = std::log(obj.q1[proj.to1[i]] / p1[proj.to1[i]]) + std::log(obj.q2[proj.to2[i]] / p2[proj.to2[i]]);
            g_min = std::min(g_min, g[i]);
            qg += q[i] * g[i];
        }
        const double gap = qg - g_min;  // Frank-Wolfe gap, bounds f - f*
        if (gap <= options.tolerance && (iterations == 0 || last_improvement < options.tolerance)) {
            converged = true;
            break;
        }
        if (iterations >= options.max_iterations) break;
        ++iterations;

        // Mirror step with backtracking on the relative-smoothness condition.
        eta = std::min(eta * 2.0, 1e6);
        double f_trial = f;
        bool accepted = false;
        while (eta > 1e-12) {
            double zt = 0.0;
            for (auto i : support) {
                trial[i] = q[i] * std::exp(-eta * (g[i] - g_min));
                zt += trial[i];
            }
            double lin = 0.0, div = 0.0;
            for (auto i : support) {
                trial[i] /= zt;
                lin += g[i] * (trial[i] - q[i]);
                div += xlogx_ratio(trial[i], q[i]);
            }
            f_trial = obj.value(trial);
            if (f_trial <= f + lin + div / eta + 1e-15) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            obj.value(q);
            last_improvement = 0.0;
            continue;
        }
        last_improvement = f - f_trial;
        q.swap(trial);
        f = f_trial;
    }

    MergeReport report;
    report.shared = shared;
    report.method = MergeMethod::Optimize;
    report.objective = f;
    report.iterations = iterations;
    if (!converged) {
        if (last_improvement > options.tolerance) {
            throw Error(ErrorCode::NotConverged,
                        "optimizer did not converge within " + std::to_string(options.max_iterations) + " iterations",
                        {{"iterations", iterations}, {"objective", f}, {"last_improvement", last_improvement}});
        }
        report.warnings.push_back("stopped at the iteration limit with improvement below tolerance");
    }
    auto rebuilt = rebuild_cpds(q, u.dag);
    for (auto& w : rebuilt.warnings) report.warnings.push_back(std::move(w));
    return {std::move(rebuilt.network), std::move(report)};
}

namespace {

/// True when every ancestor of a shared variable in `net` is itself shared.
bool shared_upstream(const BayesianNetwork& net, const std::set<std::string>& shared) {
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (!shared.count(net.variable(v).name)) continue;
        for (auto p : net.parents(v)) {
            if (!shared.count(net.variable(p).name)) return false;
        }
    }
    return true;
}

/// Draws the non-shared variables of one source given the shared values.
class ConditionalSampler {
public:
    ConditionalSampler(const BayesianNetwork& net, const std::set<std::string>& shared, const MergeOptions& options)
        : net_(net), options_(options), order_(net.topological_order()), upstream_(shared_upstream(net, shared)),
          is_shared_(net.size(), false) {
        for (std::size_t v = 0; v < net.size(); ++v) is_shared_[v] = shared.count(net.variable(v).name) > 0;
        if (!upstream_) gibbs_.emplace(net);
    }

    /// Fills the non-shared entries of `a`; false when the shared values have zero probability.
    bool draw(Assignment& a, std::mt19937_64& rng) {
        if (upstream_) {
            for (std::size_t v = 0; v < net_.size(); ++v) {
                if (is_shared_[v] && !std::isfinite(log_local_probability(net_, v, a))) return false;
            }
            for (auto v : order_) {
                if (!is_shared_[v]) inference::sample_variable(net_, v, a, rng);
            }
            return true;
        }
        if (net_.is_all_discrete() && !positive(a)) return false;
        inference::BoundEvidence ev(net_.size());
        for (std::size_t v = 0; v < net_.size(); ++v) {
            if (is_shared_[v]) ev[v] = a[v];
        }
        try {
            auto state = gibbs_->initialize(ev, rng, net_.is_all_discrete() ? 1000 : 200);
            for (std::size_t s = 0; s < options_.gibbs_sweeps; ++s) gibbs_->sweep(state, ev, rng);
            a = std::move(state);
            return true;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ZeroProbabilityEvidence) return false;
            throw;
        }
    }

private:
    bool positive(const Assignment& a) {
        std::vector<double> key;
        for (std::size_t v = 0; v < net_.size(); ++v) {
            if (is_shared_[v]) key.push_back(a[v]);
        }
        auto it = evidence_cache_.find(key);
        if (it != evidence_cache_.end()) return it->second;
        script::Evidence ev;
        for (std::size_t v = 0; v < net_.size(); ++v) {
            if (is_shared_[v]) ev.assignments[net_.variable(v).name] = net_.variable(v).states[static_cast<std::size_t>(a[v])];
        }
        const bool ok = std::isfinite(inference::log_evidence_probability(net_, ev));
        evidence_cache_.emplace(std::move(key), ok);
        return ok;
    }

    const BayesianNetwork& net_;
    const MergeOptions& options_;
    std::vector<std::size_t> order_;
    bool upstream_;
    std::vector<bool> is_shared_;
    std::optional<inference::GibbsSampler> gibbs_;
    std::map<std::vector<double>, bool> evidence_cache_;
};

}  // namespace

MergeResult merge_simulate(const BayesianNetwork& bn1, const BayesianNetwork& bn2, const MergeOptions& options) {
    auto shared = shared_variables(bn1, bn2);
    if (shared.empty()) throw Error(ErrorCode::NoSharedVariables, "simulate merge needs at least one shared variable");
    if (options.sample_count == 0) throw Error(ErrorCode::InvalidRequest, "sample count must be positive");
    const auto aligned = align_states(bn2, bn1);
    const auto u = layout(bn1, aligned);
    const std::set<std::string> shared_set(shared.begin(), shared.end());

    const BayesianNetwork* nets[2] = {&bn1, &aligned};
    const std::vector<std::size_t>* maps[2] = {&u.from1, &u.from2};
    ConditionalSampler conditional[2] = {ConditionalSampler(bn1, shared_set, options),
                                         ConditionalSampler(aligned, shared_set, options)};
    const std::vector<std::size_t> order[2] = {bn1.topological_order(), aligned.topological_order()};

    std::mt19937_64 rng(options.seed);
    std::bernoulli_distribution coin(0.5);
    Dataset data;
    data.columns = u.dag.variables;
    data.rows.reserve(options.sample_count);
    std::size_t rejected = 0;
    const std::size_t n = u.dag.variables.size();

    while (data.rows.size() < options.sample_count) {
        const int src = coin(rng) ? 1 : 0;
        const int oth = 1 - src;
        const auto& sn = *nets[src];
        const auto& on = *nets[oth];
        Assignment a(sn.size(), 0.0);
        for (auto v : order[src]) inference::sample_variable(sn, v, a, rng);

        Assignment b(on.size(), 0.0);
        for (std::size_t v = 0; v < on.size(); ++v) {
            if (auto i = sn.index_of(on.variable(v).name)) b[v] = a[*i];
        }
        const std::size_t attempts = data.rows.size() + rejected + 1;
        if (!conditional[oth].draw(b, rng)) {
            ++rejected;
            if (attempts >= 100 && 2 * rejected > attempts) {
                throw Error(ErrorCode::ZeroProbabilityEvidence,
                            "over half of the drawn shared configurations are impossible in the other source",
                            {{"rejected", rejected}, {"attempts", attempts}});
            }
            continue;
        }
        std::vector<double> row(n, 0.0);
        for (std::size_t v = 0; v < sn.size(); ++v) row[(*maps[src])[v]] = a[v];
        for (std::size_t v = 0; v < on.size(); ++v) row[(*maps[oth])[v]] = b[v];
        data.rows.push_back(std::move(row));
    }

    learning::LearnOptions lo;
    lo.dirichlet_alpha = 1.0;
    auto fit = learning::learn_parameters(u.dag, data, lo);

    MergeReport report;
    report.shared = shared;
    report.method = MergeMethod::Simulate;
    report.sample_count = options.sample_count;
    report.rejected_samples = rejected;
    report.warnings = std::move(fit.warnings);
    if (rejected > 0) {
        report.warnings.insert(report.warnings.begin(),
                               std::to_string(rejected) + " samples rejected for zero probability in the other source");
    }
    return {std::move(fit.network), std::move(report)};
}

MergeResult merge(const BayesianNetwork& bn1, const BayesianNetwork& bn2, MergeMethod method,
                  const MergeOptions& options) {
    if (method == MergeMethod::Disjoint) return merge_disjoint(bn1, bn2);
    if (shared_variables(bn1, bn2).empty()) {
        auto r = merge_disjoint(bn1, bn2);
        r.report.warnings.push_back("no shared variables; returned the disjoint union");
        return r;
    }
    return method == MergeMethod::Optimize ? merge_optimize(bn1, bn2, options) : merge_simulate(bn1, bn2, options);
}

}  // namespace bayescloud::integration
