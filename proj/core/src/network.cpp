#include "bayescloud/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>

#include "bayescloud/error.hpp"

namespace bayescloud {

Variable Variable::discrete(std::string name, std::vector<std::string> states, std::string description) {
    return Variable{std::move(name), VariableKind::Discrete, std::move(states), std::move(description)};
}

Variable Variable::continuous(std::string name, std::string description) {
    return Variable{std::move(name), VariableKind::Continuous, {}, std::move(description)};
}

std::optional<std::size_t> Variable::state_index(std::string_view state) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == state) return i;
    }
    return std::nullopt;
}

bool Variable::same_domain(const Variable& other) const {
    if (kind != other.kind) return false;
    std::set<std::string> a(states.begin(), states.end());
    std::set<std::string> b(other.states.begin(), other.states.end());
    return a == b && states.size() == other.states.size();
}

// ---------------------------------------------------------------------------
// Dag

std::optional<std::size_t> Dag::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i].name == name) return i;
    }
    return std::nullopt;
}

std::set<std::pair<std::string, std::string>> Dag::arcs() const {
    std::set<std::pair<std::string, std::string>> out;
    for (std::size_t c = 0; c < parents.size(); ++c) {
        for (auto p : parents[c]) out.emplace(variables[p].name, variables[c].name);
    }
    return out;
}

std::vector<std::string> Dag::find_cycle() const {
    const std::size_t n = variables.size();
    // 0 = unvisited, 1 = on stack, 2 = done; walk parent links.
    std::vector<int> color(n, 0);
    std::vector<std::size_t> stack;
    std::vector<std::string> cycle;
    std::function<bool(std::size_t)> visit = [&](std::size_t v) {
        color[v] = 1;
        stack.push_back(v);
        for (auto p : parents[v]) {
            if (color[p] == 1) {
                auto it = std::find(stack.begin(), stack.end(), p);
                // stack runs child -> parent, so reverse to get arc direction.
                std::vector<std::size_t> loop(it, stack.end());
                std::reverse(loop.begin(), loop.end());
                for (auto i : loop) cycle.push_back(variables[i].name);
                cycle.push_back(variables[loop.front()].name);
                return true;
            }
            if (color[p] == 0 && visit(p)) return true;
        }
        stack.pop_back();
        color[v] = 2;
        return false;
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (color[v] == 0 && visit(v)) return cycle;
    }
    return {};
}

std::vector<std::size_t> Dag::topological_order() const {
    const std::size_t n = variables.size();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> kids(n);
    for (std::size_t c = 0; c < n; ++c) {
        indegree[c] = parents[c].size();
        for (auto p : parents[c]) kids[p].push_back(c);
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (indegree[v] == 0) ready.push(v);
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto k : kids[v]) {
            if (--indegree[k] == 0) ready.push(k);
        }
    }
    if (order.size() != n) {
        auto cycle = find_cycle();
        std::string text;
        for (std::size_t i = 0; i < cycle.size(); ++i) text += (i ? " -> " : "") + cycle[i];
        throw Error(ErrorCode::CycleError, "directed cycle: " + text, {{"cycle", cycle}});
    }
    return order;
}

// ---------------------------------------------------------------------------
// BayesianNetwork

std::size_t BayesianNetwork::add_variable(Variable v) {
    if (index_.count(v.name)) {
        throw Error(ErrorCode::DuplicateNode, "variable '" + v.name + "' already exists", {{"variable", v.name}});
    }
    const std::size_t idx = variables_.size();
    index_.emplace(v.name, idx);
    if (v.is_discrete()) {
        cpds_.emplace_back(DiscreteTable{});
    } else {
        cpds_.emplace_back(ClgSpec{});
    }
    variables_.push_back(std::move(v));
    return idx;
}

void BayesianNetwork::set_cpd(std::size_t var, Cpd cpd) { cpds_.at(var) = std::move(cpd); }

std::optional<std::size_t> BayesianNetwork::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t BayesianNetwork::require_index(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    throw Error(ErrorCode::UnknownVariable, "unknown variable '" + std::string(name) + "'",
                {{"variable", std::string(name)}});
}

std::vector<std::size_t> BayesianNetwork::parents(std::size_t var) const {
    std::vector<std::size_t> out;
    const auto& c = cpds_.at(var);
    if (const auto* t = std::get_if<DiscreteTable>(&c)) {
        out = t->parents;
    } else {
        const auto& g = std::get<ClgSpec>(c);
        out = g.discrete_parents;
        out.insert(out.end(), g.continuous_parents.begin(), g.continuous_parents.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> BayesianNetwork::children(std::size_t var) const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < size(); ++c) {
        auto ps = parents(c);
        if (std::find(ps.begin(), ps.end(), var) != ps.end()) out.push_back(c);
    }
    return out;
}

std::set<std::pair<std::string, std::string>> BayesianNetwork::arcs() const { return dag().arcs(); }

Dag BayesianNetwork::dag() const {
    Dag d;
    d.variables = variables_;
    for (std::size_t i = 0; i < size(); ++i) d.parents.push_back(parents(i));
    return d;
}

std::vector<std::size_t> BayesianNetwork::topological_order() const { return dag().topological_order(); }

bool BayesianNetwork::is_all_discrete() const {
    return std::all_of(variables_.begin(), variables_.end(), [](const Variable& v) { return v.is_discrete(); });
}

std::size_t configuration_count(const BayesianNetwork& net, std::span<const std::size_t> parents) {
    std::size_t n = 1;
    for (auto p : parents) n *= net.variable(p).cardinality();
    return n;
}

std::size_t configuration_index(const BayesianNetwork& net, std::span<const std::size_t> parents,
                                const Assignment& a) {
    std::size_t idx = 0;
    for (auto p : parents) idx = idx * net.variable(p).cardinality() + static_cast<std::size_t>(a[p]);
    return idx;
}

std::string describe_configuration(const BayesianNetwork& net, std::span<const std::size_t> parents,
                                   std::size_t config) {
    std::vector<std::string> parts(parents.size());
    for (std::size_t k = parents.size(); k-- > 0;) {
        const auto& v = net.variable(parents[k]);
        parts[k] = v.name + "=" + v.states[config % v.cardinality()];
        config /= v.cardinality();
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    return out.empty() ? "(no parents)" : out;
}

// ---------------------------------------------------------------------------
// compile

namespace {

using script::Conditional;
using script::DistExpr;
using script::GaussianLiteral;
using script::TableLiteral;

struct Resolver {
    const BayesianNetwork& net;
    const std::string& owner;
    bool owner_continuous;
    std::set<std::size_t> discrete;
    std::set<std::size_t> continuous;

    void walk(const DistExpr& e) {
        if (const auto* g = std::get_if<GaussianLiteral>(&e.node)) {
            for (const auto& t : g->terms) {
                auto p = parent(t.parent);
                if (net.variable(p).is_discrete()) {
                    throw Error(ErrorCode::InvalidParent,
                                "'" + owner + "' uses discrete '" + t.parent + "' as a linear term",
                                {{"variable", owner}, {"parent", t.parent}});
                }
                continuous.insert(p);
            }
        } else if (const auto* c = std::get_if<Conditional>(&e.node)) {
            for (const auto& b : c->branches) {
                for (const auto& test : b.guard) {
                    auto p = parent(test.parent);
                    const auto& pv = net.variable(p);
                    if (!pv.is_discrete()) {
                        throw Error(ErrorCode::InvalidParent,
                                    "'" + owner + "' guards on continuous '" + test.parent + "'",
                                    {{"variable", owner}, {"parent", test.parent}});
                    }
                    if (!pv.state_index(test.state)) {
                        throw Error(ErrorCode::UnknownParentState,
                                    "'" + test.state + "' is not a state of '" + test.parent + "'",
                                    {{"variable", owner}, {"parent", test.parent}, {"state", test.state}});
                    }
                    discrete.insert(p);
                }
                walk(b.body);
            }
        }
    }

    std::size_t parent(const std::string& name) {
        auto p = net.index_of(name);
        if (!p) {
            throw Error(ErrorCode::UnknownVariable, "'" + owner + "' references undefined node '" + name + "'",
                        {{"variable", owner}, {"parent", name}});
        }
        if (name == owner) {
            throw Error(ErrorCode::CycleError, "'" + owner + "' references itself",
                        {{"cycle", std::vector<std::string>{owner, owner}}});
        }
        return *p;
    }
};

const DistExpr* select_leaf(const BayesianNetwork& net, const DistExpr& e,
                            const std::function<std::size_t(std::size_t)>& state_of) {
    const auto* c = std::get_if<Conditional>(&e.node);
    if (!c) return &e;
    for (const auto& b : c->branches) {
        bool match = true;
        for (const auto& test : b.guard) {
            auto p = *net.index_of(test.parent);
            if (net.variable(p).states[state_of(p)] != test.state) {
                match = false;
                break;
            }
        }
        if (match) return select_leaf(net, b.body, state_of);
    }
    return nullptr;
}

}  // namespace

BayesianNetwork compile(const script::ModelAst& ast) {
    BayesianNetwork net;
    for (const auto& node : ast.nodes) {
        if (const auto* d = std::get_if<script::DiscreteDomain>(&node.domain)) {
            if (d->states.size() < 2) {
                throw Error(ErrorCode::DegenerateDomain,
                            "discrete node '" + node.name + "' needs at least two states",
                            {{"variable", node.name}});
            }
            net.add_variable(Variable::discrete(node.name, d->states, node.description));
        } else {
            net.add_variable(Variable::continuous(node.name, node.description));
        }
    }

    // Resolve parents first so cycles are reported before table problems.
    std::vector<std::vector<std::size_t>> disc(ast.nodes.size()), cont(ast.nodes.size());
    Dag structure;
    structure.variables = net.variables();
    for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
        Resolver r{net, ast.nodes[i].name, !net.variable(i).is_discrete(), {}, {}};
        r.walk(ast.nodes[i].distribution);
        disc[i].assign(r.discrete.begin(), r.discrete.end());
        cont[i].assign(r.continuous.begin(), r.continuous.end());
        std::vector<std::size_t> all(disc[i]);
        all.insert(all.end(), cont[i].begin(), cont[i].end());
        std::sort(all.begin(), all.end());
        structure.parents.push_back(std::move(all));
    }
    if (auto cycle = structure.find_cycle(); !cycle.empty()) {
        std::string text;
        for (std::size_t i = 0; i < cycle.size(); ++i) text += (i ? " -> " : "") + cycle[i];
        throw Error(ErrorCode::CycleError, "directed cycle: " + text, {{"cycle", cycle}});
    }

    for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
        const auto& node = ast.nodes[i];
        const auto& var = net.variable(i);
        const auto& dp = disc[i];
        const std::size_t configs = configuration_count(net, dp);
        std::vector<std::size_t> states(net.size(), 0);
        auto state_of = [&states](std::size_t p) { return states[p]; };

        DiscreteTable table{dp, {}};
        ClgSpec clg{dp, cont[i], {}};
        for (std::size_t config = 0; config < configs; ++config) {
            std::size_t rest = config;
            for (std::size_t k = dp.size(); k-- > 0;) {
                const auto card = net.variable(dp[k]).cardinality();
                states[dp[k]] = rest % card;
                rest /= card;
            }
            const DistExpr* leaf = select_leaf(net, node.distribution, state_of);
            if (!leaf) {
                const auto where = describe_configuration(net, dp, config);
                throw Error(ErrorCode::IncompleteTable,
                            "no branch of '" + var.name + "' covers configuration " + where,
                            {{"variable", var.name}, {"configuration", where}});
            }
            const bool leaf_is_table = std::holds_alternative<TableLiteral>(leaf->node);
            if (leaf_is_table != var.is_discrete()) {
                throw Error(ErrorCode::KindMismatch, "distribution of '" + var.name + "' does not match its domain",
                            {{"variable", var.name}});
            }
            if (var.is_discrete()) {
                const auto& row = std::get<TableLiteral>(leaf->node).probabilities;
                if (row.size() != var.cardinality()) {
                    throw Error(ErrorCode::MissingStateProbability,
                                "row of '" + var.name + "' has the wrong number of entries", {{"variable", var.name}});
                }
                double sum = 0.0;
                for (const auto& p : row) sum += p.value;
                if (std::fabs(sum - 1.0) > kRowTolerance) {
                    const auto where = describe_configuration(net, dp, config);
                    throw Error(ErrorCode::RowNotNormalized,
                                "row of '" + var.name + "' at " + where + " sums to " + script::format_number(sum),
                                {{"variable", var.name}, {"configuration", where}, {"sum", sum}});
                }
                for (const auto& p : row) table.probabilities.push_back(p.value / sum);
            } else {
                const auto& g = std::get<GaussianLiteral>(leaf->node);
                LinearGaussian lg;
                lg.intercept = g.mean.value;
                lg.variance = g.variance.value;
                lg.coefficients.assign(cont[i].size(), 0.0);
                for (const auto& t : g.terms) {
                    auto p = *net.index_of(t.parent);
                    auto pos = std::find(cont[i].begin(), cont[i].end(), p) - cont[i].begin();
                    lg.coefficients[static_cast<std::size_t>(pos)] = t.coefficient.value;
                }
                clg.components.push_back(std::move(lg));
            }
        }
        if (var.is_discrete()) {
            net.set_cpd(i, std::move(table));
        } else {
            net.set_cpd(i, std::move(clg));
        }
    }
    return net;
}

BayesianNetwork compile_script(std::string_view text) { return compile(script::parse_model(text)); }

// ---------------------------------------------------------------------------
// to_ast

script::ModelAst to_ast(const BayesianNetwork& net) {
    script::ModelAst ast;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& var = net.variable(i);
        script::NodeDef node;
        node.name = var.name;
        node.description = var.description;
        if (var.is_discrete()) {
            node.domain = script::DiscreteDomain{var.states};
        } else {
            node.domain = script::ContinuousDomain{};
        }

        std::vector<std::size_t> dp;
        std::function<DistExpr(std::size_t)> leaf_for;
        if (const auto* t = std::get_if<DiscreteTable>(&net.cpd(i))) {
            dp = t->parents;
            leaf_for = [&, t](std::size_t config) {
                TableLiteral lit;
                const auto k = var.cardinality();
                for (std::size_t s = 0; s < k; ++s) lit.probabilities.emplace_back(t->probabilities[config * k + s]);
                return DistExpr{lit};
            };
        } else {
            const auto* g = &std::get<ClgSpec>(net.cpd(i));
            dp = g->discrete_parents;
            leaf_for = [&, g](std::size_t config) {
                const auto& comp = g->components[config];
                GaussianLiteral lit;
                lit.mean = comp.intercept;
                lit.variance = comp.variance;
                for (std::size_t k = 0; k < g->continuous_parents.size(); ++k) {
                    lit.terms.push_back({comp.coefficients[k], net.variable(g->continuous_parents[k]).name});
                }
                return DistExpr{lit};
            };
        }

        if (dp.empty()) {
            node.distribution = leaf_for(0);
        } else {
            Conditional cond;
            const std::size_t configs = configuration_count(net, dp);
            for (std::size_t config = 0; config < configs; ++config) {
                script::Branch b;
                std::size_t rest = config;
                b.guard.resize(dp.size());
                for (std::size_t k = dp.size(); k-- > 0;) {
                    const auto& pv = net.variable(dp[k]);
                    b.guard[k] = {pv.name, pv.states[rest % pv.cardinality()]};
                    rest /= pv.cardinality();
                }
                b.body = leaf_for(config);
                cond.branches.push_back(std::move(b));
            }
            node.distribution = DistExpr{std::move(cond)};
        }
        ast.nodes.push_back(std::move(node));
    }
    return ast;
}

std::string to_script(const BayesianNetwork& net) { return script::serialize_model(to_ast(net)); }

// ---------------------------------------------------------------------------
// joint factorization

double log_local_probability(const BayesianNetwork& net, std::size_t var, const Assignment& a) {
    const auto& cpd = net.cpd(var);
    if (const auto* t = std::get_if<DiscreteTable>(&cpd)) {
        const auto k = net.variable(var).cardinality();
        const auto config = configuration_index(net, t->parents, a);
        return std::log(t->probabilities[config * k + static_cast<std::size_t>(a[var])]);
    }
    const auto& g = std::get<ClgSpec>(cpd);
    const auto& comp = g.components[configuration_index(net, g.discrete_parents, a)];
    double mean = comp.intercept;
    for (std::size_t k = 0; k < g.continuous_parents.size(); ++k) mean += comp.coefficients[k] * a[g.continuous_parents[k]];
    const double d = a[var] - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * comp.variance) - 0.5 * d * d / comp.variance;
}

double log_joint_probability(const BayesianNetwork& net, const Assignment& a) {
    if (a.size() != net.size()) {
        throw Error(ErrorCode::IncompleteAssignment, "assignment covers " + std::to_string(a.size()) + " of " +
                                                         std::to_string(net.size()) + " variables");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < net.size(); ++i) total += log_local_probability(net, i, a);
    return total;
}

double joint_probability(const BayesianNetwork& net, const Assignment& a) {
    return std::exp(log_joint_probability(net, a));
}

Assignment to_assignment(const BayesianNetwork& net, const script::Evidence& ev) {
    Assignment a(net.size(), 0.0);
    std::vector<bool> seen(net.size(), false);
    for (const auto& [name, value] : ev.assignments) {
        const auto i = net.require_index(name);
        const auto& var = net.variable(i);
        if (var.is_discrete()) {
            const auto* s = std::get_if<std::string>(&value);
            auto idx = s ? var.state_index(*s) : std::nullopt;
            if (!idx) {
                throw Error(ErrorCode::UnknownState, "value for '" + name + "' is not one of its states",
                            {{"variable", name}});
            }
            a[i] = static_cast<double>(*idx);
        } else {
            const auto* d = std::get_if<double>(&value);
            if (!d || !std::isfinite(*d)) {
                throw Error(ErrorCode::UnknownState, "continuous variable '" + name + "' needs a finite number",
                            {{"variable", name}});
            }
            a[i] = *d;
        }
        seen[i] = true;
    }
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!seen[i]) {
            throw Error(ErrorCode::IncompleteAssignment, "no value for '" + net.variable(i).name + "'",
                        {{"variable", net.variable(i).name}});
        }
    }
    return a;
}

double log_joint_probability(const BayesianNetwork& net, const script::Evidence& a) {
    return log_joint_probability(net, to_assignment(net, a));
}

double joint_probability(const BayesianNetwork& net, const script::Evidence& a) {
    return std::exp(log_joint_probability(net, a));
}

// ---------------------------------------------------------------------------
// validate

std::size_t ValidationReport::count(std::string_view code) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [code](const Finding& f) { return f.code == code; }));
}

ValidationReport validate(const BayesianNetwork& net) {
    ValidationReport report;
    auto add = [&report](ErrorCode code, const std::string& var, std::string message) {
        report.findings.push_back({std::string(to_token(code)), var, std::move(message)});
    };

    bool structure_ok = true;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& var = net.variable(i);
        if (var.is_discrete()) {
            std::set<std::string> unique(var.states.begin(), var.states.end());
            if (var.states.size() < 2) add(ErrorCode::DegenerateDomain, var.name, "fewer than two states");
            if (unique.size() != var.states.size()) add(ErrorCode::DuplicateState, var.name, "repeated state name");
        }
        const auto& cpd = net.cpd(i);
        const bool is_table = std::holds_alternative<DiscreteTable>(cpd);
        if (is_table != var.is_discrete()) {
            add(ErrorCode::KindMismatch, var.name, "distribution type does not match the variable kind");
            structure_ok = false;
            continue;
        }
        auto check_parents = [&](const std::vector<std::size_t>& ps, bool want_discrete) {
            for (auto p : ps) {
                if (p >= net.size() || p == i) {
                    add(ErrorCode::InvalidParent, var.name, "parent index out of range");
                    structure_ok = false;
                } else if (net.variable(p).is_discrete() != want_discrete) {
                    add(ErrorCode::InvalidParent, var.name,
                        std::string(want_discrete ? "continuous" : "discrete") + " parent '" +
                            net.variable(p).name + "' in the wrong parent list");
                    structure_ok = false;
                }
            }
        };
        if (const auto* t = std::get_if<DiscreteTable>(&cpd)) {
            check_parents(t->parents, true);
        } else {
            const auto& g = std::get<ClgSpec>(cpd);
            check_parents(g.discrete_parents, true);
            check_parents(g.continuous_parents, false);
        }
    }
    if (!structure_ok) return report;

    if (auto cycle = net.dag().find_cycle(); !cycle.empty()) {
        std::string text;
        for (std::size_t i = 0; i < cycle.size(); ++i) text += (i ? " -> " : "") + cycle[i];
        add(ErrorCode::CycleError, cycle.front(), "directed cycle: " + text);
    }

    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& var = net.variable(i);
        const auto& cpd = net.cpd(i);
        if (const auto* t = std::get_if<DiscreteTable>(&cpd)) {
            const auto configs = configuration_count(net, t->parents);
            const auto k = var.cardinality();
            if (t->probabilities.size() != configs * k) {
                add(ErrorCode::IncompleteTable, var.name,
                    "table has " + std::to_string(t->probabilities.size()) + " entries, expected " +
                        std::to_string(configs * k));
                continue;
            }
            for (std::size_t c = 0; c < configs; ++c) {
                double sum = 0.0;
                bool in_range = true;
                for (std::size_t s = 0; s < k; ++s) {
                    const double p = t->probabilities[c * k + s];
                    in_range = in_range && p >= 0.0 && p <= 1.0;
                    sum += p;
                }
                const auto where = describe_configuration(net, t->parents, c);
                if (!in_range) add(ErrorCode::ProbabilityOutOfRange, var.name, "entry outside [0, 1] at " + where);
                if (!(std::fabs(sum - 1.0) <= kRowTolerance)) {
                    add(ErrorCode::RowNotNormalized, var.name,
                        "row at " + where + " sums to " + script::format_number(sum));
                }
            }
        } else {
            const auto& g = std::get<ClgSpec>(cpd);
            const auto configs = configuration_count(net, g.discrete_parents);
            if (g.components.size() != configs) {
                add(ErrorCode::IncompleteTable, var.name,
                    "has " + std::to_string(g.components.size()) + " Gaussian components, expected " +
                        std::to_string(configs));
                continue;
            }
            for (std::size_t c = 0; c < configs; ++c) {
                const auto& comp = g.components[c];
                const auto where = describe_configuration(net, g.discrete_parents, c);
                if (comp.coefficients.size() != g.continuous_parents.size()) {
                    add(ErrorCode::IncompleteTable, var.name, "coefficient count mismatch at " + where);
                }
                if (!(comp.variance > 0.0) || !std::isfinite(comp.variance)) {
                    report.findings.push_back({"variance_not_positive", var.name,
                                               "variance " + script::format_number(comp.variance) + " at " + where});
                }
                if (!std::isfinite(comp.intercept)) {
                    add(ErrorCode::InvalidParams, var.name, "non-finite intercept at " + where);
                }
            }
        }
    }
    return report;
}

}  // namespace bayescloud
