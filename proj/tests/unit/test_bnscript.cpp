#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "bayescloud/bnscript.hpp"
#include "bayescloud/error.hpp"
#include "oracles.hpp"

using namespace bayescloud;
using namespace bayescloud::script;

namespace {

using oracle::slurp;

ErrorCode parse_error(const std::string& text) {
    try {
        parse_model(text);
    } catch (const ScriptError& e) {
        EXPECT_GE(e.line(), 1u);
        EXPECT_GE(e.column(), 1u);
        return e.code();
    }
    ADD_FAILURE() << "expected a ScriptError for:\n" << text;
    return ErrorCode::IoError;
}

const std::string kOneNode = R"(defineNode(A, Description);
{
    defineState(Discrete, a1, a2);
    p(A) =
        {a1: 0.3; a2: 0.7;}
}
)";

}  // namespace

TEST(ParseModel, ScriptOne) {
    const auto ast = parse_model(slurp(oracle::fixture("script1.bns")));
    ASSERT_EQ(ast.nodes.size(), 2u);
    EXPECT_EQ(ast.nodes[0].name, "EbolaVirusDisease");
    EXPECT_EQ(std::get<DiscreteDomain>(ast.nodes[0].domain).states, (std::vector<std::string>{"has", "not"}));
    EXPECT_EQ(ast.nodes[0].description, "Description");
    EXPECT_EQ(ast.nodes[1].name, "Haemorrhage");
    EXPECT_EQ(std::get<DiscreteDomain>(ast.nodes[1].domain).states, (std::vector<std::string>{"yes", "no"}));
    const auto& cond = std::get<Conditional>(ast.nodes[1].distribution.node);
    ASSERT_EQ(cond.branches.size(), 2u);
    EXPECT_EQ(cond.branches[0].guard, (Guard{{"EbolaVirusDisease", "has"}}));
    const auto& row = std::get<TableLiteral>(cond.branches[0].body.node);
    EXPECT_EQ(row.probabilities, (std::vector<Number>{0.9, 0.1}));
    EXPECT_EQ(referenced_parents(ast.nodes[1].distribution), (std::vector<std::string>{"EbolaVirusDisease"}));
}

TEST(ParseModel, ScriptTwo) {
    const auto ast = parse_model(slurp(oracle::fixture("script2.bns")));
    ASSERT_EQ(ast.nodes.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<ContinuousDomain>(ast.nodes[1].domain));
    const auto& cond = std::get<Conditional>(ast.nodes[1].distribution.node);
    const auto& g0 = std::get<GaussianLiteral>(cond.branches[0].body.node);
    const auto& g1 = std::get<GaussianLiteral>(cond.branches[1].body.node);
    EXPECT_EQ(g0.mean.value, 103.0);
    EXPECT_EQ(g0.variance.value, 1.0);
    EXPECT_EQ(g1.mean.value, 98.6);
    EXPECT_TRUE(g0.terms.empty());
}

TEST(ParseModel, EmptyProgram) {
    EXPECT_TRUE(parse_model("").nodes.empty());
    EXPECT_TRUE(parse_model("  \n// nothing\n# here\n").nodes.empty());
    EXPECT_EQ(serialize_model(ModelAst{}), "");
}

TEST(ParseModel, RowsNormalizedToDeclarationOrder) {
    const auto ast = parse_model(R"(defineNode(A, x);
{ defineState(Discrete, a1, a2, a3); p(A) = {a3: 0.5; a1: 0.2; a2: 0.3;} })");
    const auto& t = std::get<TableLiteral>(ast.nodes[0].distribution.node);
    EXPECT_EQ(t.probabilities, (std::vector<Number>{0.2, 0.3, 0.5}));
}

TEST(ParseModel, LinearTermsAndNesting) {
    const auto ast = parse_model(R"bns(
defineNode(Dose); { defineState(Continuous); p(Dose) = { NormalDist(5, 2) } }
defineNode(Sex, Patient sex); { defineState(Discrete, f, m); p(Sex) = {f: 0.5; m: 0.5;} }
defineNode(Age, "Age (years)"); { defineState(Discrete, young, old); p(Age) = {young: 0.6; old: 0.4;} }
defineNode(Level, Serum level);
{
    defineState(Continuous);
    p(Level | Sex, Dose, Age) =
        if (Sex == f) {
            if (Age == young) { NormalDist(1 + 0.5*Dose, 1) }
            else { NormalDist(-2 - 1.5*Dose, 0.25) }
        }
        else if (Sex == m && Age == old) { NormalDist(3e-1*Dose, 2.0) }
        else { NormalDist(0, 1) }
}
)bns");
    ASSERT_EQ(ast.nodes.size(), 4u);
    EXPECT_EQ(ast.nodes[2].description, "Age (years)");
    EXPECT_EQ(ast.nodes[1].description, "Patient sex");
    const auto& outer = std::get<Conditional>(ast.nodes[3].distribution.node);
    ASSERT_EQ(outer.branches.size(), 3u);
    const auto& inner = std::get<Conditional>(outer.branches[0].body.node);
    EXPECT_TRUE(inner.branches[1].guard.empty());
    const auto& g = std::get<GaussianLiteral>(inner.branches[1].body.node);
    EXPECT_EQ(g.mean.value, -2.0);
    ASSERT_EQ(g.terms.size(), 1u);
    EXPECT_EQ(g.terms[0].coefficient.value, -1.5);
    EXPECT_EQ(outer.branches[1].guard, (Guard{{"Sex", "m"}, {"Age", "old"}}));
    EXPECT_EQ(std::get<GaussianLiteral>(outer.branches[1].body.node).terms[0].coefficient.value, 0.3);
    EXPECT_EQ(parse_model(serialize_model(ast)), ast);
}

TEST(ParseModel, Diagnostics) {
    EXPECT_EQ(parse_error("defineNode(A, x) { }"), ErrorCode::SyntaxError);
    EXPECT_EQ(parse_error(kOneNode + kOneNode), ErrorCode::DuplicateNode);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, a); p(A) = {a: 1;} }"), ErrorCode::DuplicateState);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = {a: 0.5; c: 0.5;} }"),
              ErrorCode::UnknownStateReference);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = {a: 1.5; b: 0.5;} }"),
              ErrorCode::ProbabilityOutOfRange);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = {a: 1;} }"),
              ErrorCode::MissingStateProbability);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = {a: 0.5; a: 0.5;} }"),
              ErrorCode::DuplicateAssignment);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Continuous); p(A) = { NormalDist(0, 0) } }"),
              ErrorCode::InvalidVariance);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Continuous); p(A) = {a: 1;} }"), ErrorCode::KindMismatch);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = { NormalDist(0, 1) } }"),
              ErrorCode::KindMismatch);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A | B) = {a: 0.5; b: 0.5;} }"),
              ErrorCode::ParentMismatch);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = if (B == b1) {a: 0.5; b: 0.5;} }"),
              ErrorCode::ParentMismatch);
    EXPECT_EQ(parse_error("defineNode(A, x); { defineState(Discrete, a, b); p(A) = {a: 0.5; b: 0.5;}"),
              ErrorCode::SyntaxError);
    EXPECT_EQ(parse_error("defineNode(A, unterminated"), ErrorCode::SyntaxError);
}

TEST(ParseModel, SyntaxErrorPosition) {
    try {
        parse_model("defineNode(A, x);\n{\n    defineState(Discrete, a b);\n}");
        FAIL();
    } catch (const ScriptError& e) {
        EXPECT_EQ(e.code(), ErrorCode::SyntaxError);
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 29u);
        EXPECT_FALSE(e.expected().empty());
    }
}

TEST(SerializeModel, ScriptOneRoundTrip) {
    const auto ast = parse_model(slurp(oracle::fixture("script1.bns")));
    const auto text = serialize_model(ast);
    EXPECT_EQ(parse_model(text), ast);
    EXPECT_NE(text.find("{yes: 0.9; no: 0.1;}"), std::string::npos);
    EXPECT_EQ(serialize_model(parse_model(text)), text);
}

TEST(SerializeModel, ScriptTwoKeepsSpelling) {
    const auto text = serialize_model(parse_model(slurp(oracle::fixture("script2.bns"))));
    EXPECT_NE(text.find("NormalDist(103, 1.0)"), std::string::npos) << text;
    EXPECT_NE(text.find("NormalDist(98.6, 1.0)"), std::string::npos) << text;
}

TEST(SerializeModel, FreshNumbersUseShortestForm) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(103), "103");
    EXPECT_EQ(format_number(1e-12), "1e-12");
    for (double x : {0.1, 1.0 / 3.0, 98.6, 2.5e-300, 123456789.125}) {
        EXPECT_EQ(std::stod(format_number(x)), x);
    }
}

TEST(ParseEvidence, Forms) {
    EXPECT_EQ(parse_evidence("A = a1").assignments.at("A"), EvidenceValue(std::string("a1")));
    EXPECT_TRUE(parse_evidence("").empty());
    const auto ev = parse_evidence("Fever = 100.0\nEbolaVirusDisease = has");
    ASSERT_EQ(ev.assignments.size(), 2u);
    EXPECT_EQ(std::get<double>(ev.assignments.at("Fever")), 100.0);
    EXPECT_EQ(std::get<std::string>(ev.assignments.at("EbolaVirusDisease")), "has");
    const auto ev2 = parse_evidence("# comment\n  X = -2.5 ; # trailing\n\nY=y\n");
    EXPECT_EQ(std::get<double>(ev2.assignments.at("X")), -2.5);
    EXPECT_EQ(parse_evidence(serialize_evidence(ev2)), ev2);
}

TEST(ParseEvidence, Errors) {
    auto code = [](const std::string& text) {
        try {
            parse_evidence(text);
        } catch (const ScriptError& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code("A = a1\nA = a2"), ErrorCode::DuplicateAssignment);
    EXPECT_EQ(code("A a1"), ErrorCode::SyntaxError);
    EXPECT_EQ(code("A = "), ErrorCode::SyntaxError);
    EXPECT_EQ(code("A = a1 b1"), ErrorCode::SyntaxError);
    EXPECT_EQ(code("= a1"), ErrorCode::SyntaxError);
}

// ---------------------------------------------------------------------------
// Round-trip property over generated ASTs.

namespace {

struct AstGen {
    std::mt19937_64 rng;

    std::size_t pick(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

    Number number(double lo, double hi) {
        const double v = std::uniform_real_distribution<double>(lo, hi)(rng);
        switch (pick(0, 3)) {
            case 0: return Number(v);
            case 1: {
                const double r = std::round(v * 100.0) / 100.0;
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.2f", std::fabs(r));
                return Number(r, buf);
            }
            case 2: return Number(std::round(v));
            default: return Number(v, format_number(std::fabs(v)));
        }
    }

    std::string description() {
        static const std::string alphabet = "abc XYZ09_-,.;:#/()\"\\\t";
        if (coin(0.2)) return "";
        std::string d;
        for (std::size_t i = 0, n = pick(1, 12); i < n; ++i) d += alphabet[pick(0, alphabet.size() - 1)];
        if (coin(0.2)) d = " " + d;
        if (coin(0.1)) d += "\nline";
        return d;
    }

    Guard guard(const std::vector<std::string>& parents) {
        Guard g;
        std::vector<std::string> ps = parents;
        std::shuffle(ps.begin(), ps.end(), rng);
        for (std::size_t i = 0, n = pick(1, ps.size()); i < n; ++i) g.push_back({ps[i], "t" + std::to_string(pick(0, 3))});
        return g;
    }

    DistExpr leaf(const NodeDef& node, const std::vector<std::string>& continuous_parents) {
        if (const auto* d = std::get_if<DiscreteDomain>(&node.domain)) {
            TableLiteral t;
            for (std::size_t s = 0; s < d->states.size(); ++s) t.probabilities.push_back(number(0.0, 1.0));
            return {t};
        }
        GaussianLiteral g;
        g.mean = number(-50.0, 150.0);
        for (const auto& p : continuous_parents) {
            if (coin()) g.terms.push_back({number(-3.0, 3.0), p});
        }
        g.variance = number(0.05, 9.0);
        if (g.variance.value <= 0.0) g.variance = Number(0.5);
        return {g};
    }

    DistExpr dist(const NodeDef& node, const std::vector<std::string>& discrete_parents,
                  const std::vector<std::string>& continuous_parents, int depth) {
        if (discrete_parents.empty() || depth > 2 || coin(0.3)) return leaf(node, continuous_parents);
        Conditional c;
        const auto n = pick(1, 3);
        for (std::size_t i = 0; i < n; ++i) {
            const bool last = i + 1 == n;
            Guard g = (last && i > 0 && coin(0.4)) ? Guard{} : guard(discrete_parents);
            c.branches.push_back({g, dist(node, discrete_parents, continuous_parents, depth + 1)});
        }
        return {c};
    }

    ModelAst model() {
        ModelAst ast;
        const auto n = pick(0, 6);
        for (std::size_t i = 0; i < n; ++i) {
            NodeDef node;
            node.name = "N" + std::to_string(i) + (coin() ? "_x" : "");
            node.description = description();
            if (coin(0.7)) {
                DiscreteDomain d;
                for (std::size_t s = 0, k = pick(1, 4); s < k; ++s) d.states.push_back("t" + std::to_string(s));
                node.domain = d;
            } else {
                node.domain = ContinuousDomain{};
            }
            std::vector<std::string> dp, cp;
            for (const auto& other : ast.nodes) {
                if (!coin(0.4)) continue;
                (std::holds_alternative<DiscreteDomain>(other.domain) ? dp : cp).push_back(other.name);
            }
            node.distribution = dist(node, dp, cp, 0);
            ast.nodes.push_back(std::move(node));
        }
        return ast;
    }
};

}  // namespace

TEST(SerializeModelProperty, RoundTripOnGeneratedAsts) {
    AstGen gen{std::mt19937_64(20240611)};
    for (int i = 0; i < 500; ++i) {
        const auto ast = gen.model();
        const auto text = serialize_model(ast);
        ModelAst back;
        ASSERT_NO_THROW(back = parse_model(text)) << text;
        ASSERT_EQ(back, ast) << text;
        ASSERT_EQ(serialize_model(back), text);
    }
}

TEST(ParseModelProperty, TruncatedInputAlwaysPositioned) {
    // Every prefix of a valid script either parses or fails with a positioned diagnostic.
    const auto text = slurp(oracle::fixture("script1.bns"));
    for (std::size_t n = 0; n < text.size(); ++n) {
        try {
            parse_model(text.substr(0, n));
        } catch (const ScriptError& e) {
            EXPECT_GE(e.line(), 1u);
            EXPECT_GE(e.column(), 1u);
        }
    }
}
