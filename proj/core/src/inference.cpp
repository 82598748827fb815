#include "bayescloud/inference.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "bayescloud/error.hpp"
#include "factor.hpp"

namespace bayescloud::inference {

namespace {

using detail::Factor;

// Evidence whose (log) mass falls below this is treated as impossible.
constexpr double kLogZeroThreshold = -690.7755278982137;  // log(1e-300)

double gaussian_log_density(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * d * d / variance;
}

Factor table_factor(const BayesianNetwork& net, std::size_t var) {
    const auto& t = std::get<DiscreteTable>(net.cpd(var));
    // Table layout is (parents..., var) with var fastest; reorder to ascending indices.
    std::vector<std::size_t> scope = t.parents;
    scope.push_back(var);
    Factor f;
    f.vars = scope;
    std::sort(f.vars.begin(), f.vars.end());
    for (auto v : f.vars) f.cards.push_back(net.variable(v).cardinality());
    std::size_t total = 1;
    for (auto c : f.cards) total *= c;
    f.values.assign(total, 0.0);

    std::vector<std::size_t> sorted_stride(f.vars.size());
    std::size_t s = 1;
    for (std::size_t k = f.vars.size(); k-- > 0;) {
        sorted_stride[k] = s;
        s *= f.cards[k];
    }
    std::vector<std::size_t> stride_for_scope(scope.size());
    for (std::size_t k = 0; k < scope.size(); ++k) {
        auto pos = std::lower_bound(f.vars.begin(), f.vars.end(), scope[k]) - f.vars.begin();
        stride_for_scope[k] = sorted_stride[static_cast<std::size_t>(pos)];
    }
    std::vector<std::size_t> digit(scope.size(), 0);
    for (std::size_t i = 0; i < t.probabilities.size(); ++i) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < scope.size(); ++k) idx += digit[k] * stride_for_scope[k];
        f.values[idx] = t.probabilities[i];
        for (std::size_t k = scope.size(); k-- > 0;) {
            if (++digit[k] < net.variable(scope[k]).cardinality()) break;
            digit[k] = 0;
        }
    }
    return f;
}

Factor reduce_by_evidence(Factor f, const BoundEvidence& ev) {
    for (std::size_t k = f.vars.size(); k-- > 0;) {
        const auto v = f.vars[k];
        if (ev[v]) f = detail::reduce(f, v, static_cast<std::size_t>(*ev[v]));
    }
    return f;
}

void check_query(const BayesianNetwork& net, const std::vector<std::string>& query) {
    for (const auto& q : query) net.require_index(q);
}

Categorical point_mass(const Variable& v, std::size_t state) {
    Categorical c{v.states, std::vector<double>(v.cardinality(), 0.0)};
    c.probabilities[state] = 1.0;
    return c;
}

[[noreturn]] void zero_evidence(double log_mass) {
    throw Error(ErrorCode::ZeroProbabilityEvidence, "the evidence has probability zero under the model",
                {{"log_probability", std::isfinite(log_mass) ? nlohmann::json(log_mass) : nlohmann::json(nullptr)}});
}

struct ExactContext {
    const BayesianNetwork& net;
    BoundEvidence evidence;
    std::vector<Factor> factors;
    double base_log_scale = 0.0;

    std::function<const std::string&(std::size_t)> name_of() const {
        return [this](std::size_t v) -> const std::string& { return net.variable(v).name; };
    }

    detail::Elimination run(const std::vector<std::size_t>& keep,
                            const std::optional<std::vector<std::size_t>>& order = std::nullopt) const {
        auto e = detail::eliminate_all_but(factors, keep, name_of(), order);
        e.log_scale += base_log_scale;
        return e;
    }
};

/// Normalized posterior over `keep` (ascending), checking the evidence mass.
std::vector<double> posterior_over(const ExactContext& ctx, const std::vector<std::size_t>& keep,
                                   const std::optional<std::vector<std::size_t>>& order = std::nullopt) {
    auto e = ctx.run(keep, order);
    const double log_mass = e.log_mass();
    if (!(log_mass > kLogZeroThreshold)) zero_evidence(log_mass);
    double sum = 0.0;
    for (double v : e.factor.values) sum += v;
    std::vector<double> out(e.factor.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = e.factor.values[i] / sum;
    return out;
}

ExactContext discrete_context(const BayesianNetwork& net, const script::Evidence& evidence) {
    ExactContext ctx{net, bind_evidence(net, evidence), {}, 0.0};
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (net.variable(v).is_discrete()) ctx.factors.push_back(reduce_by_evidence(table_factor(net, v), ctx.evidence));
    }
    return ctx;
}

Marginals discrete_marginals(const ExactContext& ctx, const std::vector<std::string>& query,
                             const std::optional<std::vector<std::size_t>>& order) {
    const auto& net = ctx.net;
    Marginals out;
    bool checked = false;
    for (const auto& name : query) {
        const auto q = net.require_index(name);
        const auto& var = net.variable(q);
        if (ctx.evidence[q]) {
            out.push_back({name, point_mass(var, static_cast<std::size_t>(*ctx.evidence[q]))});
            continue;
        }
        auto probs = posterior_over(ctx, {q}, order);
        checked = true;
        out.push_back({name, Categorical{var.states, std::move(probs)}});
    }
    if (!checked) {
        // Every query was observed (or none given): still reject impossible evidence.
        auto e = ctx.run({}, order);
        if (!(e.log_mass() > kLogZeroThreshold)) zero_evidence(e.log_mass());
    }
    return out;
}

}  // namespace

double GaussianMixture::mean() const {
    double m = 0.0;
    for (const auto& c : components) m += c.weight * c.mean;
    return m;
}

BoundEvidence bind_evidence(const BayesianNetwork& net, const script::Evidence& evidence) {
    BoundEvidence out(net.size());
    for (const auto& [name, value] : evidence.assignments) {
        const auto i = net.require_index(name);
        const auto& var = net.variable(i);
        if (var.is_discrete()) {
            const auto* s = std::get_if<std::string>(&value);
            auto idx = s ? var.state_index(*s) : std::nullopt;
            if (!idx) {
                std::string shown = s ? *s : script::format_number(std::get<double>(value));
                throw Error(ErrorCode::UnknownState, "'" + shown + "' is not a state of '" + name + "'",
                            {{"variable", name}, {"value", shown}});
            }
            out[i] = static_cast<double>(*idx);
        } else {
            const auto* d = std::get_if<double>(&value);
            if (!d || !std::isfinite(*d)) {
                throw Error(ErrorCode::UnknownState, "continuous variable '" + name + "' needs a numeric value",
                            {{"variable", name}});
            }
            out[i] = *d;
        }
    }
    return out;
}

Marginals eliminate(const BayesianNetwork& net, const script::Evidence& evidence,
                    const std::vector<std::string>& query) {
    if (!net.is_all_discrete()) {
        throw Error(ErrorCode::UnsupportedNetwork, "variable elimination needs an all-discrete network");
    }
    check_query(net, query);
    return discrete_marginals(discrete_context(net, evidence), query, std::nullopt);
}

Marginals eliminate(const BayesianNetwork& net, const script::Evidence& evidence,
                    const std::vector<std::string>& query, const std::vector<std::string>& order) {
    if (!net.is_all_discrete()) {
        throw Error(ErrorCode::UnsupportedNetwork, "variable elimination needs an all-discrete network");
    }
    check_query(net, query);
    std::vector<std::size_t> idx;
    for (const auto& n : order) idx.push_back(net.require_index(n));
    return discrete_marginals(discrete_context(net, evidence), query, idx);
}

double log_evidence_probability(const BayesianNetwork& net, const script::Evidence& evidence) {
    if (!net.is_all_discrete()) {
        throw Error(ErrorCode::UnsupportedNetwork, "evidence probability needs an all-discrete network");
    }
    auto ctx = discrete_context(net, evidence);
    return ctx.run({}).log_mass();
}

bool is_clg_leaf_network(const BayesianNetwork& net) {
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (net.variable(v).is_discrete()) continue;
        const auto& g = std::get<ClgSpec>(net.cpd(v));
        if (!g.continuous_parents.empty()) return false;
        if (!net.children(v).empty()) return false;
    }
    return true;
}

Marginals infer_clg_leaf(const BayesianNetwork& net, const script::Evidence& evidence,
                         const std::vector<std::string>& query) {
    check_query(net, query);
    auto ctx = discrete_context(net, evidence);
    for (std::size_t v = 0; v < net.size(); ++v) {
        const auto& var = net.variable(v);
        if (var.is_discrete()) continue;
        const bool has_children = !net.children(v).empty();
        const auto& g = std::get<ClgSpec>(net.cpd(v));
        if (has_children || !g.continuous_parents.empty()) {
            if (ctx.evidence[v] && has_children) {
                throw Error(ErrorCode::NonLeafContinuousEvidence,
                            "evidence on continuous '" + var.name + "' which has children",
                            {{"variable", var.name}});
            }
            throw Error(ErrorCode::UnsupportedNetwork,
                        "continuous '" + var.name + "' is not a leaf with discrete parents only",
                        {{"variable", var.name}});
        }
        if (!ctx.evidence[v]) continue;  // an unobserved leaf integrates to one
        const double x = *ctx.evidence[v];
        Factor f;
        f.vars = g.discrete_parents;
        for (auto p : f.vars) f.cards.push_back(net.variable(p).cardinality());
        std::vector<double> logs(g.components.size());
        double max_log = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < g.components.size(); ++c) {
            logs[c] = gaussian_log_density(x, g.components[c].intercept, g.components[c].variance);
            max_log = std::max(max_log, logs[c]);
        }
        for (double l : logs) f.values.push_back(std::exp(l - max_log));
        ctx.base_log_scale += max_log;
        ctx.factors.push_back(reduce_by_evidence(std::move(f), ctx.evidence));
    }

    Marginals out;
    bool checked = false;
    for (const auto& name : query) {
        const auto q = net.require_index(name);
        const auto& var = net.variable(q);
        if (var.is_discrete()) {
            if (ctx.evidence[q]) {
                out.push_back({name, point_mass(var, static_cast<std::size_t>(*ctx.evidence[q]))});
            } else {
                out.push_back({name, Categorical{var.states, posterior_over(ctx, {q})}});
                checked = true;
            }
            continue;
        }
        if (ctx.evidence[q]) {
            out.push_back({name, GaussianMixture{{{1.0, *ctx.evidence[q], 0.0}}}});
            continue;
        }
        const auto& g = std::get<ClgSpec>(net.cpd(q));
        std::vector<std::size_t> free_parents;
        for (auto p : g.discrete_parents) {
            if (!ctx.evidence[p]) free_parents.push_back(p);
        }
        auto post = posterior_over(ctx, free_parents);
        checked = true;
        GaussianMixture mix;
        const std::size_t configs = configuration_count(net, g.discrete_parents);
        for (std::size_t c = 0; c < configs; ++c) {
            // Split the configuration into evidence-consistent free-parent coordinates.
            std::size_t rest = c;
            std::size_t free_index = 0, free_stride = 1;
            bool consistent = true;
            for (std::size_t k = g.discrete_parents.size(); k-- > 0;) {
                const auto p = g.discrete_parents[k];
                const auto card = net.variable(p).cardinality();
                const auto state = rest % card;
                rest /= card;
                if (ctx.evidence[p]) {
                    consistent = consistent && static_cast<std::size_t>(*ctx.evidence[p]) == state;
                } else {
                    free_index += state * free_stride;
                    free_stride *= card;
                }
            }
            if (!consistent) continue;
            const double w = post[free_index];
            if (w <= 0.0) continue;
            mix.components.push_back({w, g.components[c].intercept, g.components[c].variance});
        }
        out.push_back({name, std::move(mix)});
    }
    if (!checked) {
        auto e = ctx.run({});
        if (!(e.log_mass() > kLogZeroThreshold)) zero_evidence(e.log_mass());
    }
    return out;
}

// ---------------------------------------------------------------------------
// sampling

namespace {

std::size_t draw_categorical(std::mt19937_64& rng, const double* probs, std::size_t k) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
        acc += probs[s];
        if (u < acc) return s;
    }
    // Rounding can leave acc just under 1; fall back to the last positive entry.
    for (std::size_t s = k; s-- > 0;) {
        if (probs[s] > 0.0) return s;
    }
    return k - 1;
}

double clg_mean(const ClgSpec& g, const LinearGaussian& comp, const Assignment& a) {
    double mean = comp.intercept;
    for (std::size_t k = 0; k < g.continuous_parents.size(); ++k) mean += comp.coefficients[k] * a[g.continuous_parents[k]];
    return mean;
}

}  // namespace

void sample_variable(const BayesianNetwork& net, std::size_t v, Assignment& a, std::mt19937_64& rng) {
    const auto& cpd = net.cpd(v);
    if (const auto* t = std::get_if<DiscreteTable>(&cpd)) {
        const auto k = net.variable(v).cardinality();
        const auto config = configuration_index(net, t->parents, a);
        a[v] = static_cast<double>(draw_categorical(rng, &t->probabilities[config * k], k));
    } else {
        const auto& g = std::get<ClgSpec>(cpd);
        const auto& comp = g.components[configuration_index(net, g.discrete_parents, a)];
        std::normal_distribution<double> normal(clg_mean(g, comp, a), std::sqrt(comp.variance));
        a[v] = normal(rng);
    }
}

Dataset sample_forward(const BayesianNetwork& net, std::size_t n, std::uint64_t seed) {
    Dataset data;
    data.columns = net.variables();
    const auto order = net.topological_order();
    std::mt19937_64 rng(seed);
    data.rows.reserve(n);
    Assignment a(net.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (auto v : order) sample_variable(net, v, a, rng);
        data.rows.push_back(a);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Gibbs

GibbsSampler::GibbsSampler(const BayesianNetwork& net)
    : net_(net), order_(net.topological_order()), children_(net.size()) {
    for (std::size_t v = 0; v < net.size(); ++v) {
        for (auto p : net.parents(v)) {
            children_[p].push_back(v);
            if (net.variable(v).is_discrete() && !net.variable(p).is_discrete()) {
                throw Error(ErrorCode::UnsupportedNetwork, "discrete '" + net.variable(v).name +
                                                               "' has continuous parent '" + net.variable(p).name + "'");
            }
        }
    }
}

Assignment GibbsSampler::initialize(const BoundEvidence& ev, std::mt19937_64& rng, std::size_t max_restarts) const {
    Assignment a(net_.size(), 0.0);
    for (std::size_t attempt = 0; attempt <= max_restarts; ++attempt) {
        for (auto v : order_) {
            if (ev[v]) {
                a[v] = *ev[v];
            } else {
                sample_variable(net_, v, a, rng);
            }
        }
        if (log_joint_probability(net_, a) > -std::numeric_limits<double>::infinity()) return a;
    }
    throw Error(ErrorCode::ZeroProbabilityEvidence,
                "no state consistent with the evidence was found after " + std::to_string(max_restarts) + " restarts");
}

void GibbsSampler::sweep(Assignment& a, const BoundEvidence& ev, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> weights;
    for (auto v : order_) {
        if (ev[v]) continue;
        const auto& var = net_.variable(v);
        if (var.is_discrete()) {
            const auto k = var.cardinality();
            weights.assign(k, 0.0);
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < k; ++s) {
                a[v] = static_cast<double>(s);
                double l = log_local_probability(net_, v, a);
                for (auto c : children_[v]) l += log_local_probability(net_, c, a);
                weights[s] = l;
                best = std::max(best, l);
            }
            double total = 0.0;
            for (auto& w : weights) {
                w = std::isfinite(best) ? std::exp(w - best) : 1.0;
                total += w;
            }
            double u = unit(rng) * total;
            std::size_t pick = k - 1;
            for (std::size_t s = 0; s < k; ++s) {
                if (u < weights[s]) {
                    pick = s;
                    break;
                }
                u -= weights[s];
            }
            a[v] = static_cast<double>(pick);
        } else {
            // Product of the own Gaussian and one Gaussian likelihood per continuous child.
            const auto& g = std::get<ClgSpec>(net_.cpd(v));
            const auto& comp = g.components[configuration_index(net_, g.discrete_parents, a)];
            double precision = 1.0 / comp.variance;
            double weighted = clg_mean(g, comp, a) / comp.variance;
            for (auto c : children_[v]) {
                const auto& cg = std::get<ClgSpec>(net_.cpd(c));
                const auto& cc = cg.components[configuration_index(net_, cg.discrete_parents, a)];
                auto pos = std::find(cg.continuous_parents.begin(), cg.continuous_parents.end(), v) -
                           cg.continuous_parents.begin();
                const double b = cc.coefficients[static_cast<std::size_t>(pos)];
                const double rest = clg_mean(cg, cc, a) - b * a[v];
                precision += b * b / cc.variance;
                weighted += b * (a[c] - rest) / cc.variance;
            }
            std::normal_distribution<double> normal(weighted / precision, std::sqrt(1.0 / precision));
            a[v] = normal(rng);
        }
    }
}

Marginals gibbs_query(const BayesianNetwork& net, const script::Evidence& evidence,
                      const std::vector<std::string>& query, const GibbsOptions& options) {
    check_query(net, query);
    if (options.samples <= options.burn_in) {
        throw Error(ErrorCode::InvalidRequest, "Gibbs sample count must exceed the burn-in");
    }
    const auto ev = bind_evidence(net, evidence);
    GibbsSampler sampler(net);
    std::mt19937_64 rng(options.seed);
    Assignment a = sampler.initialize(ev, rng, options.max_restarts);

    std::vector<std::size_t> qidx;
    for (const auto& name : query) qidx.push_back(net.require_index(name));
    // Discrete: per-state counts. Continuous: per discrete-parent configuration (count, sum, sum of squares).
    std::vector<std::vector<double>> counts(qidx.size());
    std::vector<std::map<std::size_t, std::array<double, 3>>> moments(qidx.size());
    for (std::size_t i = 0; i < qidx.size(); ++i) {
        if (net.variable(qidx[i]).is_discrete()) counts[i].assign(net.variable(qidx[i]).cardinality(), 0.0);
    }

    for (std::size_t sweep = 0; sweep < options.samples; ++sweep) {
        sampler.sweep(a, ev, rng);
        if (sweep < options.burn_in) continue;
        for (std::size_t i = 0; i < qidx.size(); ++i) {
            const auto q = qidx[i];
            if (net.variable(q).is_discrete()) {
                counts[i][static_cast<std::size_t>(a[q])] += 1.0;
            } else {
                const auto& g = std::get<ClgSpec>(net.cpd(q));
                auto& m = moments[i][configuration_index(net, g.discrete_parents, a)];
                m[0] += 1.0;
                m[1] += a[q];
                m[2] += a[q] * a[q];
            }
        }
    }

    const double kept = static_cast<double>(options.samples - options.burn_in);
    Marginals out;
    for (std::size_t i = 0; i < qidx.size(); ++i) {
        const auto& var = net.variable(qidx[i]);
        if (var.is_discrete()) {
            Categorical c{var.states, counts[i]};
            for (auto& p : c.probabilities) p /= kept;
            out.push_back({var.name, std::move(c)});
        } else {
            GaussianMixture mix;
            for (const auto& [config, m] : moments[i]) {
                const double mean = m[1] / m[0];
                const double variance = std::max(0.0, m[2] / m[0] - mean * mean);
                mix.components.push_back({m[0] / kept, mean, variance});
            }
            out.push_back({var.name, std::move(mix)});
        }
    }
    return out;
}

Marginals infer(const BayesianNetwork& net, const script::Evidence& evidence, std::vector<std::string> query,
                const InferOptions& options) {
    if (query.empty()) {
        for (const auto& v : net.variables()) query.push_back(v.name);
    }
    const bool discrete = net.is_all_discrete();
    const bool clg_leaf = !discrete && is_clg_leaf_network(net);
    switch (options.method) {
    case Method::Gibbs:
        return gibbs_query(net, evidence, query, options.gibbs);
    case Method::Exact:
        if (!discrete && !clg_leaf) {
            throw Error(ErrorCode::UnsupportedNetwork,
                        "exact inference needs an all-discrete network or continuous leaves only");
        }
        [[fallthrough]];
    case Method::Auto:
        if (discrete) return eliminate(net, evidence, query);
        if (clg_leaf) return infer_clg_leaf(net, evidence, query);
        return gibbs_query(net, evidence, query, options.gibbs);
    }
    return {};
}

}  // namespace bayescloud::inference
