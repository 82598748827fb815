#pragma once

// Dense discrete factors for variable elimination. Internal to the core library.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bayescloud::detail {

struct Factor {
    std::vector<std::size_t> vars;   // ascending variable indices
    std::vector<std::size_t> cards;  // aligned with vars
    std::vector<double> values;      // first variable most significant

    std::size_t size() const noexcept { return values.size(); }
    bool mentions(std::size_t var) const;
};

Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, std::size_t var);
Factor reduce(const Factor& f, std::size_t var, std::size_t state);

/// Result of eliminating everything except `keep`: an unnormalized factor
/// over the kept variables, scaled by exp(log_scale).
struct Elimination {
    Factor factor;
    double log_scale = 0.0;

    /// log of the total mass (the evidence probability when all factors were included).
    double log_mass() const;
};

/// Sums out every variable not in `keep`. With `order`, hidden variables are
/// removed in that order; otherwise by min-degree with ties broken by
/// `name_of` ordering.
Elimination eliminate_all_but(std::vector<Factor> factors, const std::vector<std::size_t>& keep,
                              const std::function<const std::string&(std::size_t)>& name_of,
                              const std::optional<std::vector<std::size_t>>& order = std::nullopt);

}  // namespace bayescloud::detail
