#include "factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "bayescloud/error.hpp"

namespace bayescloud::detail {

bool Factor::mentions(std::size_t var) const { return std::binary_search(vars.begin(), vars.end(), var); }

namespace {

/// Stride of each variable of `f` inside the index space of `vars`/`cards`.
std::vector<std::size_t> strides_in(const Factor& f, const std::vector<std::size_t>& vars) {
    std::vector<std::size_t> own(f.vars.size());
    std::size_t s = 1;
    for (std::size_t k = f.vars.size(); k-- > 0;) {
        own[k] = s;
        s *= f.cards[k];
    }
    std::vector<std::size_t> out(vars.size(), 0);
    for (std::size_t k = 0; k < f.vars.size(); ++k) {
        auto pos = std::lower_bound(vars.begin(), vars.end(), f.vars[k]) - vars.begin();
        out[static_cast<std::size_t>(pos)] = own[k];
    }
    return out;
}

double normalize_by_max(Factor& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, v);
    if (m <= 0.0 || !std::isfinite(m)) return 0.0;
    for (double& v : f.values) v /= m;
    return std::log(m);
}

}  // namespace

Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
    std::size_t total = 1;
    for (auto v : out.vars) {
        auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
        std::size_t card = (ia != a.vars.end() && *ia == v) ? a.cards[static_cast<std::size_t>(ia - a.vars.begin())]
                                                              : b.cards[static_cast<std::size_t>(
                                                                    std::lower_bound(b.vars.begin(), b.vars.end(), v) -
                                                                    b.vars.begin())];
        out.cards.push_back(card);
        total *= card;
    }
    out.values.resize(total);
    const auto sa = strides_in(a, out.vars);
    const auto sb = strides_in(b, out.vars);
    std::vector<std::size_t> digit(out.vars.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < total; ++i) {
        out.values[i] = a.values[ia] * b.values[ib];
        for (std::size_t k = out.vars.size(); k-- > 0;) {
            if (++digit[k] < out.cards[k]) {
                ia += sa[k];
                ib += sb[k];
                break;
            }
            ia -= sa[k] * (out.cards[k] - 1);
            ib -= sb[k] * (out.cards[k] - 1);
            digit[k] = 0;
        }
    }
    return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
    auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
    if (it == f.vars.end() || *it != var) return f;
    const auto pos = static_cast<std::size_t>(it - f.vars.begin());
    Factor out;
    out.vars = f.vars;
    out.cards = f.cards;
    out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
    out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
    std::size_t inner = 1;
    for (std::size_t k = pos + 1; k < f.vars.size(); ++k) inner *= f.cards[k];
    const std::size_t card = f.cards[pos];
    const std::size_t outer = f.values.size() / (inner * card);
    out.values.assign(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < card; ++s) {
            const double* src = &f.values[(o * card + s) * inner];
            double* dst = &out.values[o * inner];
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    }
    return out;
}

Factor reduce(const Factor& f, std::size_t var, std::size_t state) {
    auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
    if (it == f.vars.end() || *it != var) return f;
    const auto pos = static_cast<std::size_t>(it - f.vars.begin());
    Factor out;
    out.vars = f.vars;
    out.cards = f.cards;
    out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
    out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
    std::size_t inner = 1;
    for (std::size_t k = pos + 1; k < f.vars.size(); ++k) inner *= f.cards[k];
    const std::size_t card = f.cards[pos];
    const std::size_t outer = f.values.size() / (inner * card);
    out.values.resize(outer * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) out.values[o * inner + i] = f.values[(o * card + state) * inner + i];
    }
    return out;
}

double Elimination::log_mass() const {
    double sum = 0.0;
    for (double v : factor.values) sum += v;
    if (sum <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(sum) + log_scale;
}

Elimination eliminate_all_but(std::vector<Factor> factors, const std::vector<std::size_t>& keep,
                              const std::function<const std::string&(std::size_t)>& name_of,
                              const std::optional<std::vector<std::size_t>>& order) {
    Elimination result;
    std::set<std::size_t> keep_set(keep.begin(), keep.end());
    std::set<std::size_t> hidden;
    for (const auto& f : factors) {
        for (auto v : f.vars) {
            if (!keep_set.count(v)) hidden.insert(v);
        }
    }

    auto eliminate_one = [&](std::size_t var) {
        Factor prod{{}, {}, {1.0}};
        std::vector<Factor> rest;
        for (auto& f : factors) {
            if (f.mentions(var)) {
                prod = multiply(prod, f);
            } else {
                rest.push_back(std::move(f));
            }
        }
        Factor summed = sum_out(prod, var);
        result.log_scale += normalize_by_max(summed);
        rest.push_back(std::move(summed));
        factors = std::move(rest);
        hidden.erase(var);
    };

    if (order) {
        for (auto v : *order) {
            if (hidden.count(v)) eliminate_one(v);
        }
        if (!hidden.empty()) {
            throw Error(ErrorCode::InvalidRequest, "elimination order omits hidden variable '" +
                                                       name_of(*hidden.begin()) + "'");
        }
    }
    while (!hidden.empty()) {
        std::size_t best = *hidden.begin();
        std::size_t best_degree = std::numeric_limits<std::size_t>::max();
        for (auto v : hidden) {
            std::set<std::size_t> neighbours;
            for (const auto& f : factors) {
                if (f.mentions(v)) neighbours.insert(f.vars.begin(), f.vars.end());
            }
            const std::size_t degree = neighbours.empty() ? 0 : neighbours.size() - 1;
            if (degree < best_degree || (degree == best_degree && name_of(v) < name_of(best))) {
                best = v;
                best_degree = degree;
            }
        }
        eliminate_one(best);
    }

    Factor prod{{}, {}, {1.0}};
    for (const auto& f : factors) prod = multiply(prod, f);
    result.log_scale += normalize_by_max(prod);
    result.factor = std::move(prod);
    return result;
}

}  // namespace bayescloud::detail
