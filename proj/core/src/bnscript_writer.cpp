#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "bayescloud/bnscript.hpp"

namespace bayescloud::script {

std::string format_number(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    (void)ec;
    return std::string(buf.data(), ptr);
}

namespace {

std::string magnitude_text(const Number& n) {
    const double mag = std::fabs(n.value);
    if (!n.spelling.empty()) {
        double parsed = 0.0;
        const auto* first = n.spelling.data();
        const auto* last = first + n.spelling.size();
        auto [ptr, ec] = std::from_chars(first, last, parsed);
        if (ec == std::errc{} && ptr == last && parsed == mag) return n.spelling;
    }
    return format_number(mag);
}

std::string signed_text(const Number& n) {
    return (n.value < 0 || std::signbit(n.value) ? "-" : "") + magnitude_text(n);
}

bool plain_description(const std::string& d) {
    if (d.empty()) return true;
    if (std::isspace(static_cast<unsigned char>(d.front())) || std::isspace(static_cast<unsigned char>(d.back()))) {
        return false;
    }
    for (char c : d) {
        if (c == '(' || c == ')' || c == '"' || c == '\n' || c == '\r' || c == '\\') return false;
    }
    return true;
}

std::string quote(const std::string& d) {
    std::string out = "\"";
    for (char c : d) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else if (c == '\t') {
            out += "\\t";
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

class Writer {
public:
    explicit Writer(std::ostringstream& out) : out_(out) {}

    void node(const NodeDef& n) {
        out_ << "defineNode(" << n.name;
        if (!n.description.empty()) {
            out_ << ", " << (plain_description(n.description) ? n.description : quote(n.description));
        }
        out_ << ");\n{\n";
        if (const auto* d = std::get_if<DiscreteDomain>(&n.domain)) {
            out_ << "    defineState(Discrete";
            for (const auto& s : d->states) out_ << ", " << s;
            out_ << ");\n";
            states_ = &d->states;
        } else {
            out_ << "    defineState(Continuous);\n";
            states_ = nullptr;
        }
        out_ << "    p(" << n.name;
        auto parents = referenced_parents(n.distribution);
        for (std::size_t i = 0; i < parents.size(); ++i) out_ << (i == 0 ? " | " : ", ") << parents[i];
        out_ << ") =\n";
        dist(n.distribution, 2, true);
        out_ << "}\n";
    }

private:
    void indent(int level) {
        for (int i = 0; i < level; ++i) out_ << "    ";
    }

    void dist(const DistExpr& e, int level, bool standalone) {
        if (const auto* t = std::get_if<TableLiteral>(&e.node)) {
            indent(level);
            out_ << "{";
            for (std::size_t i = 0; i < t->probabilities.size(); ++i) {
                out_ << (i ? " " : "") << (*states_)[i] << ": " << signed_text(t->probabilities[i]) << ";";
            }
            out_ << "}\n";
        } else if (const auto* g = std::get_if<GaussianLiteral>(&e.node)) {
            indent(level);
            out_ << "{ NormalDist(";
            bool first = true;
            if (g->mean.value != 0.0 || g->terms.empty()) {
                out_ << signed_text(g->mean);
                first = false;
            }
            for (const auto& term : g->terms) {
                const bool neg = term.coefficient.value < 0 || std::signbit(term.coefficient.value);
                if (first) {
                    out_ << (neg ? "-" : "");
                } else {
                    out_ << (neg ? " - " : " + ");
                }
                first = false;
                out_ << magnitude_text(term.coefficient) << "*" << term.parent;
            }
            out_ << ", " << signed_text(g->variance) << ") }\n";
        } else {
            const auto& c = std::get<Conditional>(e.node);
            if (!standalone) {
                indent(level);
                out_ << "{\n";
                ++level;
            }
            for (std::size_t i = 0; i < c.branches.size(); ++i) {
                const auto& b = c.branches[i];
                indent(level);
                if (b.guard.empty()) {
                    out_ << "else\n";
                } else {
                    out_ << (i == 0 ? "if (" : "else if (");
                    for (std::size_t k = 0; k < b.guard.size(); ++k) {
                        out_ << (k ? " && " : "") << b.guard[k].parent << " == " << b.guard[k].state;
                    }
                    out_ << ")\n";
                }
                dist(b.body, level + 1, false);
            }
            if (!standalone) {
                --level;
                indent(level);
                out_ << "}\n";
            }
        }
    }

    std::ostringstream& out_;
    const std::vector<std::string>* states_ = nullptr;
};

}  // namespace

std::string serialize_model(const ModelAst& ast) {
    std::ostringstream out;
    Writer w(out);
    for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
        if (i) out << "\n";
        w.node(ast.nodes[i]);
    }
    return out.str();
}

std::string serialize_evidence(const Evidence& evidence) {
    std::ostringstream out;
    for (const auto& [name, value] : evidence.assignments) {
        out << name << " = ";
        if (const auto* s = std::get_if<std::string>(&value)) {
            out << *s;
        } else {
            out << format_number(std::get<double>(value));
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace bayescloud::script
