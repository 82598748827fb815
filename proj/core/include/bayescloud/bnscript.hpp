#pragma once

// Bayesian Network Script (.bns) and evidence script (.bne) front end.
//
// A model is a sequence of node blocks:
//
//   defineNode(Haemorrhage, Description);
//   {
//       defineState(Discrete, yes, no);
//       p(Haemorrhage | EbolaVirusDisease) =
//           if (EbolaVirusDisease == has)
//               {yes: 0.9; no: 0.1;}
//           else if (EbolaVirusDisease == not)
//               {yes: 0.01; no: 0.99;}
//   }
//
// Continuous nodes use `defineState(Continuous);` and `NormalDist(mean, variance)`
// leaves. The mean may carry linear terms over continuous parents,
// `NormalDist(2 + 0.5*Dose - 1.5*Age, 1.0)`; this conditional-linear form goes
// beyond the two example scripts the language was introduced with.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bayescloud::script {

/// A numeric literal. Equality compares the value only; the spelling is kept
/// so that a parsed script re-serializes with the author's digits.
struct Number {
    double value = 0.0;
    std::string spelling;

    Number() = default;
    Number(double v) : value(v) {}  // NOLINT: implicit by intent
    Number(double v, std::string s) : value(v), spelling(std::move(s)) {}

    friend bool operator==(const Number& a, const Number& b) { return a.value == b.value; }
};

/// Probabilities in the node's state-declaration order.
struct TableLiteral {
    std::vector<Number> probabilities;
    bool operator==(const TableLiteral&) const = default;
};

struct LinearTerm {
    Number coefficient;
    std::string parent;
    bool operator==(const LinearTerm&) const = default;
};

struct GaussianLiteral {
    Number mean;
    std::vector<LinearTerm> terms;
    Number variance;
    bool operator==(const GaussianLiteral&) const = default;
};

struct GuardTest {
    std::string parent;
    std::string state;
    bool operator==(const GuardTest&) const = default;
};

/// Conjunction of equality tests; empty means "always" (a trailing else).
using Guard = std::vector<GuardTest>;

struct Branch;

/// Ordered first-match branches. Only the last branch may have an empty guard.
struct Conditional {
    std::vector<Branch> branches;
    bool operator==(const Conditional&) const;
};

struct DistExpr {
    std::variant<TableLiteral, GaussianLiteral, Conditional> node;
    bool operator==(const DistExpr&) const = default;
};

struct Branch {
    Guard guard;
    DistExpr body;
    bool operator==(const Branch&) const = default;
};

inline bool Conditional::operator==(const Conditional& other) const { return branches == other.branches; }

struct DiscreteDomain {
    std::vector<std::string> states;
    bool operator==(const DiscreteDomain&) const = default;
};
struct ContinuousDomain {
    bool operator==(const ContinuousDomain&) const = default;
};
using Domain = std::variant<DiscreteDomain, ContinuousDomain>;

struct NodeDef {
    std::string name;
    std::string description;
    Domain domain;
    DistExpr distribution;
    bool operator==(const NodeDef&) const = default;
};

struct ModelAst {
    std::vector<NodeDef> nodes;
    bool operator==(const ModelAst&) const = default;
};

/// Parent names referenced by a distribution (guards and linear terms), in
/// order of first reference.
std::vector<std::string> referenced_parents(const DistExpr& expr);

/// Throws ScriptError with a line/column diagnostic; never returns a partial AST.
ModelAst parse_model(std::string_view text);

/// Canonical formatting; parse_model(serialize_model(a)) == a.
std::string serialize_model(const ModelAst& ast);

using EvidenceValue = std::variant<std::string, double>;

struct Evidence {
    std::map<std::string, EvidenceValue> assignments;
    bool operator==(const Evidence&) const = default;
    bool empty() const { return assignments.empty(); }
};

/// One `Name = value` per line; `#` starts a comment.
Evidence parse_evidence(std::string_view text);

std::string serialize_evidence(const Evidence& evidence);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace bayescloud::script
