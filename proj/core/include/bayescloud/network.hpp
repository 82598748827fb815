#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "bayescloud/bnscript.hpp"

namespace bayescloud {

enum class VariableKind { Discrete, Continuous };

struct Variable {
    std::string name;
    VariableKind kind = VariableKind::Discrete;
    std::vector<std::string> states;  // empty for continuous variables
    std::string description;

    static Variable discrete(std::string name, std::vector<std::string> states, std::string description = {});
    static Variable continuous(std::string name, std::string description = {});

    bool is_discrete() const noexcept { return kind == VariableKind::Discrete; }
    std::size_t cardinality() const noexcept { return states.size(); }
    std::optional<std::size_t> state_index(std::string_view state) const;

    /// Same kind and same state set (order-insensitive).
    bool same_domain(const Variable& other) const;

    bool operator==(const Variable&) const = default;
};

/// P(X | discrete parents). Rows are laid out by parent configuration, first
/// parent most significant; each row holds one probability per state of X.
struct DiscreteTable {
    std::vector<std::size_t> parents;
    std::vector<double> probabilities;
    bool operator==(const DiscreteTable&) const = default;
};

struct LinearGaussian {
    double intercept = 0.0;
    std::vector<double> coefficients;  // aligned with ClgSpec::continuous_parents
    double variance = 1.0;
    bool operator==(const LinearGaussian&) const = default;
};

/// Conditional linear Gaussian: one LinearGaussian per discrete-parent configuration.
struct ClgSpec {
    std::vector<std::size_t> discrete_parents;
    std::vector<std::size_t> continuous_parents;
    std::vector<LinearGaussian> components;
    bool operator==(const ClgSpec&) const = default;
};

using Cpd = std::variant<DiscreteTable, ClgSpec>;

/// Full assignment aligned with the network's variable order. Discrete
/// variables hold their state index, continuous variables their value.
using Assignment = std::vector<double>;

/// Structure only: variables and sorted parent index lists.
struct Dag {
    std::vector<Variable> variables;
    std::vector<std::vector<std::size_t>> parents;

    std::optional<std::size_t> index_of(std::string_view name) const;
    std::set<std::pair<std::string, std::string>> arcs() const;
    /// Empty when acyclic, otherwise the names along one directed cycle.
    std::vector<std::string> find_cycle() const;
    std::vector<std::size_t> topological_order() const;
};

class BayesianNetwork {
public:
    BayesianNetwork() = default;

    /// Adds a variable with an empty placeholder distribution; throws on duplicate names.
    std::size_t add_variable(Variable v);
    void set_cpd(std::size_t var, Cpd cpd);

    std::size_t size() const noexcept { return variables_.size(); }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const Variable& variable(std::size_t i) const { return variables_.at(i); }
    const Cpd& cpd(std::size_t i) const { return cpds_.at(i); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Throws UnknownVariable.
    std::size_t require_index(std::string_view name) const;

    std::vector<std::size_t> parents(std::size_t var) const;
    std::vector<std::size_t> children(std::size_t var) const;
    std::set<std::pair<std::string, std::string>> arcs() const;
    Dag dag() const;
    std::vector<std::size_t> topological_order() const;

    bool is_all_discrete() const;

    bool operator==(const BayesianNetwork& other) const {
        return variables_ == other.variables_ && cpds_ == other.cpds_;
    }

private:
    std::vector<Variable> variables_;
    std::vector<Cpd> cpds_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Mixed-radix index of the discrete parent configuration found in `a`.
std::size_t configuration_index(const BayesianNetwork& net, std::span<const std::size_t> parents, const Assignment& a);

/// Human-readable "A=a1, B=b2" rendering of a configuration index.
std::string describe_configuration(const BayesianNetwork& net, std::span<const std::size_t> parents,
                                   std::size_t config);

/// Number of parent configurations (product of parent cardinalities).
std::size_t configuration_count(const BayesianNetwork& net, std::span<const std::size_t> parents);

/// Builds the network defined by a parsed script. Throws Error with codes
/// CycleError, DegenerateDomain, IncompleteTable, RowNotNormalized,
/// UnknownParentState, UnknownVariable or InvalidParent.
BayesianNetwork compile(const script::ModelAst& ast);

/// Convenience: parse_model + compile.
BayesianNetwork compile_script(std::string_view text);

/// Script form of a network: one explicit branch per discrete-parent configuration.
script::ModelAst to_ast(const BayesianNetwork& net);

std::string to_script(const BayesianNetwork& net);

/// log P(a) under the factorization; -inf when the assignment has zero mass.
double log_joint_probability(const BayesianNetwork& net, const Assignment& a);
double joint_probability(const BayesianNetwork& net, const Assignment& a);

/// Name-keyed form; throws IncompleteAssignment unless every variable is assigned.
double log_joint_probability(const BayesianNetwork& net, const script::Evidence& a);
double joint_probability(const BayesianNetwork& net, const script::Evidence& a);

/// log P(x_var | parents(var)) with densities for continuous variables.
double log_local_probability(const BayesianNetwork& net, std::size_t var, const Assignment& a);

/// Converts a name-keyed total assignment. Throws IncompleteAssignment / UnknownVariable / UnknownState.
Assignment to_assignment(const BayesianNetwork& net, const script::Evidence& a);

struct Finding {
    std::string code;
    std::string variable;
    std::string message;
    bool operator==(const Finding&) const = default;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const noexcept { return findings.empty(); }
    std::size_t count(std::string_view code) const;
};

/// Lists every structural or numeric violation; never throws.
ValidationReport validate(const BayesianNetwork& net);

inline constexpr double kRowTolerance = 1e-9;

}  // namespace bayescloud
