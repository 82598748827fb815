#include "bayescloud/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "bayescloud/error.hpp"

namespace bayescloud::learning {

namespace {

constexpr double kVarianceFloor = 1e-9;

/// Rows re-expressed in `vars` order, discrete cells re-indexed to the
/// variable's own state order.
std::vector<std::vector<double>> aligned_rows(const std::vector<Variable>& vars, const Dataset& data) {
    if (data.rows.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
    std::vector<std::size_t> col(vars.size());
    std::vector<std::vector<double>> state_map(vars.size());
    for (std::size_t v = 0; v < vars.size(); ++v) {
        auto c = data.column_index(vars[v].name);
        if (!c) {
            throw Error(ErrorCode::DataError, "dataset has no column '" + vars[v].name + "'", {{"variable", vars[v].name}});
        }
        col[v] = *c;
        const auto& column = data.columns[*c];
        if (column.is_discrete() != vars[v].is_discrete()) {
            throw Error(ErrorCode::DataError, "column '" + vars[v].name + "' does not match the variable's kind",
                        {{"variable", vars[v].name}});
        }
        if (!column.is_discrete()) continue;
        for (const auto& s : column.states) {
            auto idx = vars[v].state_index(s);
            if (!idx) {
                throw Error(ErrorCode::DataError, "column '" + vars[v].name + "' has unknown state '" + s + "'",
                            {{"variable", vars[v].name}, {"state", s}});
            }
            state_map[v].push_back(static_cast<double>(*idx));
        }
    }
    std::vector<std::vector<double>> out;
    out.reserve(data.rows.size());
    for (const auto& row : data.rows) {
        std::vector<double> r(vars.size());
        for (std::size_t v = 0; v < vars.size(); ++v) {
            const double x = row[col[v]];
            r[v] = vars[v].is_discrete() ? state_map[v][static_cast<std::size_t>(x)] : x;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::size_t config_of(const std::vector<Variable>& vars, const std::vector<std::size_t>& parents,
                      const std::vector<double>& row) {
    std::size_t c = 0;
    for (auto p : parents) c = c * vars[p].cardinality() + static_cast<std::size_t>(row[p]);
    return c;
}

std::size_t config_count(const std::vector<Variable>& vars, const std::vector<std::size_t>& parents) {
    std::size_t c = 1;
    for (auto p : parents) c *= vars[p].cardinality();
    return c;
}

/// Counts N(config, state) for one discrete family.
std::vector<double> family_counts(const std::vector<Variable>& vars, std::size_t v, const std::vector<std::size_t>& parents,
                                  const std::vector<std::vector<double>>& rows) {
    const auto k = vars[v].cardinality();
    std::vector<double> counts(config_count(vars, parents) * k, 0.0);
    for (const auto& row : rows) counts[config_of(vars, parents, row) * k + static_cast<std::size_t>(row[v])] += 1.0;
    return counts;
}

double free_parameters(const BayesianNetwork& net, std::size_t v) {
    const auto& cpd = net.cpd(v);
    if (const auto* t = std::get_if<DiscreteTable>(&cpd)) {
        return static_cast<double>((net.variable(v).cardinality() - 1) * configuration_count(net, t->parents));
    }
    const auto& g = std::get<ClgSpec>(cpd);
    return static_cast<double>(g.components.size() * (g.continuous_parents.size() + 2));
}

/// MLE-BIC of one discrete family straight from counts.
double family_bic(const std::vector<Variable>& vars, std::size_t v, const std::vector<std::size_t>& parents,
                  const std::vector<std::vector<double>>& rows) {
    const auto k = vars[v].cardinality();
    const auto counts = family_counts(vars, v, parents, rows);
    double ll = 0.0;
    for (std::size_t c = 0; c * k < counts.size(); ++c) {
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) total += counts[c * k + s];
        for (std::size_t s = 0; s < k; ++s) {
            const double n = counts[c * k + s];
            if (n > 0.0) ll += n * std::log(n / total);
        }
    }
    const double params = static_cast<double>((k - 1) * (counts.size() / k));
    return ll - 0.5 * params * std::log(static_cast<double>(rows.size()));
}

}  // namespace

ParameterFit learn_parameters(const Dag& structure, const Dataset& data, const LearnOptions& options) {
    if (!(options.dirichlet_alpha >= 0.0)) {
        throw Error(ErrorCode::InvalidParams, "dirichlet_alpha must be non-negative", {{"alpha", options.dirichlet_alpha}});
    }
    const auto& vars = structure.variables;
    const auto rows = aligned_rows(vars, data);
    if (auto cycle = structure.find_cycle(); !cycle.empty()) {
        throw Error(ErrorCode::CycleError, "structure is cyclic", {{"cycle", cycle}});
    }

    ParameterFit fit;
    for (const auto& v : vars) fit.network.add_variable(v);
    const double alpha = options.dirichlet_alpha;

    for (std::size_t v = 0; v < vars.size(); ++v) {
        const auto& parents = structure.parents[v];
        if (vars[v].is_discrete()) {
            for (auto p : parents) {
                if (!vars[p].is_discrete()) {
                    throw Error(ErrorCode::InvalidParent, "discrete '" + vars[v].name + "' cannot have continuous parent '" +
                                                              vars[p].name + "'");
                }
            }
            const auto k = vars[v].cardinality();
            auto table = family_counts(vars, v, parents, rows);
            for (std::size_t c = 0; c * k < table.size(); ++c) {
                double total = 0.0;
                for (std::size_t s = 0; s < k; ++s) total += table[c * k + s];
                const double denom = total + alpha * static_cast<double>(k);
                if (denom <= 0.0) {
                    for (std::size_t s = 0; s < k; ++s) table[c * k + s] = 1.0 / static_cast<double>(k);
                    fit.warnings.push_back("no rows for '" + vars[v].name + "' under configuration " + std::to_string(c) +
                                           "; uniform row used");
                    continue;
                }
                for (std::size_t s = 0; s < k; ++s) table[c * k + s] = (table[c * k + s] + alpha) / denom;
            }
            fit.network.set_cpd(v, DiscreteTable{parents, std::move(table)});
            continue;
        }

        ClgSpec g;
        for (auto p : parents) (vars[p].is_discrete() ? g.discrete_parents : g.continuous_parents).push_back(p);
        const auto configs = config_count(vars, g.discrete_parents);
        std::vector<std::vector<std::size_t>> members(configs);
        for (std::size_t r = 0; r < rows.size(); ++r) members[config_of(vars, g.discrete_parents, rows[r])].push_back(r);
        const auto m = g.continuous_parents.size();
        for (std::size_t c = 0; c < configs; ++c) {
            LinearGaussian comp;
            comp.coefficients.assign(m, 0.0);
            const auto& idx = members[c];
            if (idx.empty()) {
                comp.variance = 1.0;
                fit.warnings.push_back("no rows for '" + vars[v].name + "' under configuration " + std::to_string(c) +
                                       "; standard normal used");
                g.components.push_back(std::move(comp));
                continue;
            }
            Eigen::MatrixXd x(idx.size(), m + 1);
            Eigen::VectorXd y(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const auto& row = rows[idx[i]];
                x(static_cast<Eigen::Index>(i), 0) = 1.0;
                for (std::size_t j = 0; j < m; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = row[g.continuous_parents[j]];
                y(static_cast<Eigen::Index>(i)) = row[v];
            }
            const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
            comp.intercept = beta(0);
            for (std::size_t j = 0; j < m; ++j) comp.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
            const Eigen::VectorXd residual = y - x * beta;
            comp.variance = std::max(kVarianceFloor, residual.squaredNorm() / static_cast<double>(idx.size()));
            g.components.push_back(std::move(comp));
        }
        fit.network.set_cpd(v, std::move(g));
    }

    for (auto& w : fit.warnings) {
        // Replace the raw configuration index with its readable form.
        auto pos = w.find("configuration ");
        if (pos == std::string::npos) continue;
        auto q = w.find('\'');
        auto name = w.substr(q + 1, w.find('\'', q + 1) - q - 1);
        const auto v = *fit.network.index_of(name);
        const auto end = w.find(';', pos);
        const auto c = std::stoul(w.substr(pos + 14, end - pos - 14));
        std::vector<std::size_t> dp;
        for (auto p : structure.parents[v]) {
            if (vars[p].is_discrete()) dp.push_back(p);
        }
        w = w.substr(0, pos) + "configuration {" + describe_configuration(fit.network, dp, c) + "}" + w.substr(end);
    }
    return fit;
}

BicScore bic_score(const BayesianNetwork& net, const Dataset& data) {
    const auto rows = aligned_rows(net.variables(), data);
    BicScore s;
    s.families.assign(net.size(), 0.0);
    const double log_n = std::log(static_cast<double>(rows.size()));
    for (std::size_t v = 0; v < net.size(); ++v) {
        double ll = 0.0;
        for (const auto& row : rows) ll += log_local_probability(net, v, row);
        s.families[v] = ll - 0.5 * free_parameters(net, v) * log_n;
        s.total += s.families[v];
    }
    return s;
}

double structure_score(const Dag& structure, const Dataset& data) {
    for (const auto& v : structure.variables) {
        if (!v.is_discrete()) {
            throw Error(ErrorCode::ContinuousVariablesPresent, "structure score needs all-discrete data",
                        {{"variable", v.name}});
        }
    }
    const auto rows = aligned_rows(structure.variables, data);
    double total = 0.0;
    for (std::size_t v = 0; v < structure.variables.size(); ++v) {
        total += family_bic(structure.variables, v, structure.parents[v], rows);
    }
    return total;
}

namespace {

enum class MoveType { Add = 0, Delete = 1, Reverse = 2 };

struct Move {
    MoveType type;
    std::size_t from;
    std::size_t to;
    double delta;
};

class Search {
public:
    Search(const std::vector<Variable>& vars, const std::vector<std::vector<double>>& rows, std::size_t max_parents)
        : vars_(vars), rows_(rows), max_parents_(max_parents) {}

    double family(std::size_t v, const std::set<std::size_t>& parents) {
        std::vector<std::size_t> ps(parents.begin(), parents.end());
        auto key = std::make_pair(v, ps);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double s = family_bic(vars_, v, ps, rows_);
        cache_.emplace(std::move(key), s);
        return s;
    }

    double score(const std::vector<std::set<std::size_t>>& g) {
        double total = 0.0;
        for (std::size_t v = 0; v < g.size(); ++v) total += family(v, g[v]);
        return total;
    }

    /// True when `to` can reach `from` via parent links reversed, i.e. a path from -> ... -> to exists.
    static bool reaches(const std::vector<std::set<std::size_t>>& g, std::size_t from, std::size_t to,
                        std::pair<std::size_t, std::size_t> skip = {SIZE_MAX, SIZE_MAX}) {
        // Walk backwards from `to` along parent links looking for `from`.
        std::vector<bool> seen(g.size(), false);
        std::vector<std::size_t> stack{to};
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            if (v == from) return true;
            if (seen[v]) continue;
            seen[v] = true;
            for (auto p : g[v]) {
                if (p == skip.first && v == skip.second) continue;
                stack.push_back(p);
            }
        }
        return false;
    }

    std::vector<Move> legal_moves(const std::vector<std::set<std::size_t>>& g) {
        std::vector<Move> moves;
        const auto n = g.size();
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t v = 0; v < n; ++v) {
                if (u == v) continue;
                if (g[v].count(u)) {
                    auto without = g[v];
                    without.erase(u);
                    moves.push_back({MoveType::Delete, u, v, family(v, without) - family(v, g[v])});
                    // Reverse u->v into v->u: needs no other path u ~> v.
                    if (g[u].size() < max_parents_ && !reaches(g, u, v, {u, v})) {
                        auto with = g[u];
                        with.insert(v);
                        moves.push_back({MoveType::Reverse, u, v,
                                         family(v, without) - family(v, g[v]) + family(u, with) - family(u, g[u])});
                    }
                } else if (!g[u].count(v) && g[v].size() < max_parents_ && !reaches(g, v, u)) {
                    auto with = g[v];
                    with.insert(u);
                    moves.push_back({MoveType::Add, u, v, family(v, with) - family(v, g[v])});
                }
            }
        }
        return moves;
    }

    static void apply(std::vector<std::set<std::size_t>>& g, const Move& m) {
        switch (m.type) {
            case MoveType::Add: g[m.to].insert(m.from); break;
            case MoveType::Delete: g[m.to].erase(m.from); break;
            case MoveType::Reverse:
                g[m.to].erase(m.from);
                g[m.from].insert(m.to);
                break;
        }
    }

    void climb(std::vector<std::set<std::size_t>>& g) {
        constexpr double kTie = 1e-9;
        while (true) {
            auto moves = legal_moves(g);
            const Move* best = nullptr;
            for (const auto& m : moves) {
                if (m.delta <= kTie) continue;
                if (!best || m.delta > best->delta + kTie ||
                    (std::abs(m.delta - best->delta) <= kTie &&
                     std::tie(m.from, m.to, m.type) < std::tie(best->from, best->to, best->type))) {
                    best = &m;
                }
            }
            if (!best) return;
            apply(g, *best);
        }
    }

private:
    const std::vector<Variable>& vars_;
    const std::vector<std::vector<double>>& rows_;
    std::size_t max_parents_;
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

}  // namespace

StructureResult learn_structure(const Dataset& data, const LearnOptions& options) {
    if (data.columns.size() < 2) {
        throw Error(ErrorCode::TooFewColumns, "structure learning needs at least two columns",
                    {{"columns", data.columns.size()}});
    }
    for (const auto& v : data.columns) {
        if (!v.is_discrete()) {
            throw Error(ErrorCode::ContinuousVariablesPresent, "structure learning needs all-discrete data",
                        {{"variable", v.name}});
        }
    }
    const auto& vars = data.columns;
    const auto rows = aligned_rows(vars, data);
    const auto n = vars.size();
    Search search(vars, rows, options.max_parents);

    std::vector<std::set<std::size_t>> best(n);
    search.climb(best);
    double best_score = search.score(best);
    for (std::size_t r = 1; r < std::max<std::size_t>(options.restarts, 1); ++r) {
        std::mt19937_64 rng(options.seed + r);
        auto g = best;
        // Perturb with random legal moves, then climb again.
        for (std::size_t step = 0; step < n; ++step) {
            auto moves = search.legal_moves(g);
            if (moves.empty()) break;
            std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
            Search::apply(g, moves[pick(rng)]);
        }
        search.climb(g);
        const double s = search.score(g);
        if (s > best_score + 1e-9) {
            best = std::move(g);
            best_score = s;
        }
    }

    Dag dag;
    dag.variables = vars;
    for (const auto& ps : best) dag.parents.emplace_back(ps.begin(), ps.end());
    auto fit = learn_parameters(dag, data, options);
    return {std::move(fit.network), best_score, std::move(fit.warnings)};
}

}  // namespace bayescloud::learning
