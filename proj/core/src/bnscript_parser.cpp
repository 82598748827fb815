#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <system_error>

#include "bayescloud/bnscript.hpp"
#include "bayescloud/error.hpp"

namespace bayescloud::script {

namespace {

enum class Tok {
    Ident,
    Number,
    String,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semicolon,
    Comma,
    Colon,
    Pipe,
    Assign,
    Equals,
    And,
    Plus,
    Minus,
    Star,
    End,
};

std::string_view describe(Tok t) {
    switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "string";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Semicolon: return "';'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Pipe: return "'|'";
    case Tok::Assign: return "'='";
    case Tok::Equals: return "'=='";
    case Tok::And: return "'&&'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::End: return "end of input";
    }
    return "token";
}

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

double to_double(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nan("");
    }
    return value;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_trivia();
        Token tok;
        tok.line = line_;
        tok.column = col_;
        if (pos_ >= src_.size()) {
            tok.kind = Tok::End;
            return tok;
        }
        const char c = src_[pos_];
        if (ident_start(c)) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
            tok.kind = Tok::Ident;
            tok.text = std::string(src_.substr(start, pos_ - start));
            return tok;
        }
        if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
            tok.kind = Tok::Number;
            tok.text = lex_number();
            return tok;
        }
        if (c == '"') {
            tok.kind = Tok::String;
            tok.text = lex_string(tok.line, tok.column);
            return tok;
        }
        advance();
        switch (c) {
        case '(': tok.kind = Tok::LParen; break;
        case ')': tok.kind = Tok::RParen; break;
        case '{': tok.kind = Tok::LBrace; break;
        case '}': tok.kind = Tok::RBrace; break;
        case ';': tok.kind = Tok::Semicolon; break;
        case ',': tok.kind = Tok::Comma; break;
        case ':': tok.kind = Tok::Colon; break;
        case '|': tok.kind = Tok::Pipe; break;
        case '+': tok.kind = Tok::Plus; break;
        case '-': tok.kind = Tok::Minus; break;
        case '*': tok.kind = Tok::Star; break;
        case '=':
            if (pos_ < src_.size() && src_[pos_] == '=') {
                advance();
                tok.kind = Tok::Equals;
            } else {
                tok.kind = Tok::Assign;
            }
            break;
        case '&':
            if (pos_ < src_.size() && src_[pos_] == '&') {
                advance();
                tok.kind = Tok::And;
                break;
            }
            [[fallthrough]];
        default:
            throw ScriptError(ErrorCode::SyntaxError, tok.line, tok.column,
                              std::string("unexpected character '") + c + "'");
        }
        return tok;
    }

    /// Raw description text up to (not including) the closing ')'.
    Token raw_until_rparen() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) advance();
        Token tok;
        tok.line = line_;
        tok.column = col_;
        if (pos_ < src_.size() && src_[pos_] == '"') {
            tok.kind = Tok::String;
            tok.text = lex_string(tok.line, tok.column);
            return tok;
        }
        std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != ')' && src_[pos_] != '\n') advance();
        if (pos_ >= src_.size() || src_[pos_] != ')') {
            throw ScriptError(ErrorCode::SyntaxError, line_, col_, "unterminated node description", "')'");
        }
        std::string text(src_.substr(start, pos_ - start));
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
        tok.kind = Tok::String;
        tok.text = std::move(text);
        return tok;
    }

    std::size_t line() const { return line_; }
    std::size_t column() const { return col_; }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_trivia() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string lex_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && digit(src_[pos_])) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            while (pos_ < src_.size() && digit(src_[pos_])) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save_pos = pos_, save_line = line_, save_col = col_;
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
            if (pos_ < src_.size() && digit(src_[pos_])) {
                while (pos_ < src_.size() && digit(src_[pos_])) advance();
            } else {
                pos_ = save_pos;
                line_ = save_line;
                col_ = save_col;
            }
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    std::string lex_string(std::size_t line, std::size_t column) {
        advance();  // opening quote
        std::string out;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                advance();
                char e = src_[pos_];
                out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
            } else {
                out.push_back(c);
            }
            advance();
        }
        if (pos_ >= src_.size()) {
            throw ScriptError(ErrorCode::SyntaxError, line, column, "unterminated string literal", "'\"'");
        }
        advance();
        return out;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

    ModelAst parse_program() {
        ModelAst ast;
        std::set<std::string> seen;
        while (cur_.kind != Tok::End) {
            const Token at = cur_;
            NodeDef node = parse_node();
            if (!seen.insert(node.name).second) {
                throw ScriptError(ErrorCode::DuplicateNode, at.line, at.column,
                                  "node '" + node.name + "' is defined more than once");
            }
            ast.nodes.push_back(std::move(node));
        }
        return ast;
    }

private:
    [[noreturn]] void fail(std::string_view expected) const {
        std::string found = cur_.kind == Tok::End ? std::string("end of input") : "'" + cur_.text + "'";
        if (cur_.kind != Tok::End && cur_.text.empty()) found = std::string(describe(cur_.kind));
        throw ScriptError(ErrorCode::SyntaxError, cur_.line, cur_.column,
                          "expected " + std::string(expected) + ", found " + found, std::string(expected));
    }

    Token take() {
        Token t = std::move(cur_);
        cur_ = lex_.next();
        return t;
    }

    Token expect(Tok kind) {
        if (cur_.kind != kind) fail(describe(kind));
        return take();
    }

    void expect_keyword(std::string_view word) {
        if (cur_.kind != Tok::Ident || cur_.text != word) fail("'" + std::string(word) + "'");
        take();
    }

    bool at_keyword(std::string_view word) const { return cur_.kind == Tok::Ident && cur_.text == word; }

    bool accept(Tok kind) {
        if (cur_.kind != kind) return false;
        take();
        return true;
    }

    Number parse_number_token() {
        Token t = expect(Tok::Number);
        return Number(to_double(t.text), t.text);
    }

    NodeDef parse_node() {
        NodeDef node;
        expect_keyword("defineNode");
        // The description is raw text, so the token after '(' is lexed by hand.
        if (cur_.kind != Tok::LParen) fail("'('");
        Token name = lex_.next();
        if (name.kind != Tok::Ident) {
            cur_ = std::move(name);
            fail("identifier");
        }
        node.name = name.text;
        Token after = lex_.next();
        if (after.kind == Tok::Comma) {
            node.description = lex_.raw_until_rparen().text;
            cur_ = lex_.next();
            expect(Tok::RParen);
        } else {
            cur_ = std::move(after);
            expect(Tok::RParen);
        }
        accept(Tok::Semicolon);
        expect(Tok::LBrace);

        expect_keyword("defineState");
        expect(Tok::LParen);
        if (at_keyword("Discrete")) {
            take();
            DiscreteDomain domain;
            std::set<std::string> seen;
            while (accept(Tok::Comma)) {
                Token s = expect(Tok::Ident);
                if (!seen.insert(s.text).second) {
                    throw ScriptError(ErrorCode::DuplicateState, s.line, s.column,
                                      "state '" + s.text + "' declared twice in node '" + node.name + "'");
                }
                domain.states.push_back(s.text);
            }
            if (domain.states.empty()) fail("','");
            node.domain = std::move(domain);
        } else if (at_keyword("Continuous")) {
            take();
            node.domain = ContinuousDomain{};
        } else {
            fail("'Discrete' or 'Continuous'");
        }
        expect(Tok::RParen);
        expect(Tok::Semicolon);

        expect_keyword("p");
        expect(Tok::LParen);
        Token self = expect(Tok::Ident);
        if (self.text != node.name) {
            throw ScriptError(ErrorCode::SyntaxError, self.line, self.column,
                              "distribution header names '" + self.text + "' inside node '" + node.name + "'",
                              node.name);
        }
        std::vector<std::string> header_parents;
        std::vector<Token> header_tokens;
        if (accept(Tok::Pipe)) {
            do {
                Token p = expect(Tok::Ident);
                if (std::find(header_parents.begin(), header_parents.end(), p.text) != header_parents.end()) {
                    throw ScriptError(ErrorCode::ParentMismatch, p.line, p.column,
                                      "parent '" + p.text + "' listed twice");
                }
                header_parents.push_back(p.text);
                header_tokens.push_back(p);
            } while (accept(Tok::Comma));
        }
        expect(Tok::RParen);
        const Token assign_at = cur_;
        expect(Tok::Assign);

        current_ = &node;
        node.distribution = parse_dist();
        current_ = nullptr;
        accept(Tok::Semicolon);
        expect(Tok::RBrace);

        auto used = referenced_parents(node.distribution);
        std::set<std::string> used_set(used.begin(), used.end());
        std::set<std::string> header_set(header_parents.begin(), header_parents.end());
        for (std::size_t i = 0; i < header_parents.size(); ++i) {
            if (!used_set.count(header_parents[i])) {
                throw ScriptError(ErrorCode::ParentMismatch, header_tokens[i].line, header_tokens[i].column,
                                  "parent '" + header_parents[i] + "' is never referenced by the distribution");
            }
        }
        for (const auto& u : used) {
            if (!header_set.count(u)) {
                throw ScriptError(ErrorCode::ParentMismatch, assign_at.line, assign_at.column,
                                  "distribution references '" + u + "' which is not listed after '|'");
            }
        }
        return node;
    }

    DistExpr parse_dist() {
        if (at_keyword("if")) return DistExpr{parse_if_chain()};
        return parse_block();
    }

    DistExpr parse_block() {
        expect(Tok::LBrace);
        DistExpr out;
        if (at_keyword("if")) {
            out.node = parse_if_chain();
        } else if (at_keyword("NormalDist")) {
            out.node = parse_gaussian();
            accept(Tok::Semicolon);
        } else {
            out.node = parse_table();
        }
        expect(Tok::RBrace);
        return out;
    }

    Conditional parse_if_chain() {
        Conditional cond;
        expect_keyword("if");
        cond.branches.push_back(parse_guarded_branch());
        while (at_keyword("else")) {
            take();
            if (at_keyword("if")) {
                take();
                cond.branches.push_back(parse_guarded_branch());
            } else {
                Branch b;
                b.body = parse_branch_body();
                cond.branches.push_back(std::move(b));
                break;
            }
        }
        return cond;
    }

    Branch parse_guarded_branch() {
        Branch b;
        expect(Tok::LParen);
        do {
            GuardTest test;
            test.parent = expect(Tok::Ident).text;
            expect(Tok::Equals);
            test.state = expect(Tok::Ident).text;
            b.guard.push_back(std::move(test));
        } while (accept(Tok::And));
        expect(Tok::RParen);
        b.body = parse_branch_body();
        return b;
    }

    DistExpr parse_branch_body() {
        if (at_keyword("if")) return DistExpr{parse_if_chain()};
        return parse_block();
    }

    TableLiteral parse_table() {
        const Token start = cur_;
        const auto* domain = std::get_if<DiscreteDomain>(&current_->domain);
        if (!domain) {
            throw ScriptError(ErrorCode::KindMismatch, cur_.line, cur_.column,
                              "continuous node '" + current_->name + "' needs a NormalDist distribution",
                              "'NormalDist'");
        }
        std::vector<std::optional<Number>> slots(domain->states.size());
        while (cur_.kind == Tok::Ident) {
            Token state = take();
            auto it = std::find(domain->states.begin(), domain->states.end(), state.text);
            if (it == domain->states.end()) {
                throw ScriptError(ErrorCode::UnknownStateReference, state.line, state.column,
                                  "'" + state.text + "' is not a state of '" + current_->name + "'");
            }
            auto& slot = slots[static_cast<std::size_t>(it - domain->states.begin())];
            if (slot) {
                throw ScriptError(ErrorCode::DuplicateAssignment, state.line, state.column,
                                  "state '" + state.text + "' assigned twice in one row");
            }
            expect(Tok::Colon);
            Token num_at = cur_;
            Number value = parse_number_token();
            if (!(value.value >= 0.0 && value.value <= 1.0)) {
                throw ScriptError(ErrorCode::ProbabilityOutOfRange, num_at.line, num_at.column,
                                  "probability " + num_at.text + " is outside [0, 1]");
            }
            slot = std::move(value);
            if (!accept(Tok::Semicolon)) break;
        }
        if (cur_.kind != Tok::RBrace) fail("state name or '}'");
        TableLiteral table;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i]) {
                throw ScriptError(ErrorCode::MissingStateProbability, start.line, start.column,
                                  "row does not give a probability for state '" + domain->states[i] + "'");
            }
            table.probabilities.push_back(std::move(*slots[i]));
        }
        return table;
    }

    GaussianLiteral parse_gaussian() {
        const Token at = cur_;
        if (!std::holds_alternative<ContinuousDomain>(current_->domain)) {
            throw ScriptError(ErrorCode::KindMismatch, at.line, at.column,
                              "discrete node '" + current_->name + "' needs a probability table", "'{'");
        }
        expect_keyword("NormalDist");
        expect(Tok::LParen);
        GaussianLiteral g;
        bool have_intercept = false;
        bool first = true;
        for (;;) {
            bool negative = false;
            if (accept(Tok::Minus)) {
                negative = true;
            } else if (!first && !accept(Tok::Plus)) {
                break;
            } else if (first) {
                accept(Tok::Plus);
            }
            first = false;
            const Token term_at = cur_;
            std::optional<Number> coef;
            if (cur_.kind == Tok::Number) coef = parse_number_token();
            if (coef && !accept(Tok::Star)) {
                if (have_intercept) {
                    throw ScriptError(ErrorCode::SyntaxError, term_at.line, term_at.column,
                                      "mean has more than one constant term", "'*'");
                }
                have_intercept = true;
                g.mean = *coef;
                if (negative) g.mean.value = -g.mean.value;
                continue;
            }
            Token parent = expect(Tok::Ident);
            for (const auto& t : g.terms) {
                if (t.parent == parent.text) {
                    throw ScriptError(ErrorCode::SyntaxError, parent.line, parent.column,
                                      "parent '" + parent.text + "' appears twice in the mean");
                }
            }
            LinearTerm term{coef ? *coef : Number(1.0), parent.text};
            if (negative) term.coefficient.value = -term.coefficient.value;
            g.terms.push_back(std::move(term));
        }
        expect(Tok::Comma);
        const Token var_at = cur_;
        g.variance = parse_number_token();
        if (!(g.variance.value > 0.0) || !std::isfinite(g.variance.value)) {
            throw ScriptError(ErrorCode::InvalidVariance, var_at.line, var_at.column,
                              "variance must be positive, got " + var_at.text);
        }
        expect(Tok::RParen);
        return g;
    }

    Lexer lex_;
    Token cur_;
    const NodeDef* current_ = nullptr;
};

void collect_parents(const DistExpr& expr, std::vector<std::string>& out) {
    auto add = [&out](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    if (const auto* g = std::get_if<GaussianLiteral>(&expr.node)) {
        for (const auto& t : g->terms) add(t.parent);
    } else if (const auto* c = std::get_if<Conditional>(&expr.node)) {
        for (const auto& b : c->branches) {
            for (const auto& test : b.guard) add(test.parent);
            collect_parents(b.body, out);
        }
    }
}

}  // namespace

std::vector<std::string> referenced_parents(const DistExpr& expr) {
    std::vector<std::string> out;
    collect_parents(expr, out);
    return out;
}

ModelAst parse_model(std::string_view text) {
    Parser parser(text);
    return parser.parse_program();
}

Evidence parse_evidence(std::string_view text) {
    Evidence ev;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

        Lexer lex(line);
        Token name = lex.next();
        if (name.kind == Tok::End) continue;
        if (name.kind != Tok::Ident) {
            throw ScriptError(ErrorCode::SyntaxError, line_no, name.column, "expected variable name", "identifier");
        }
        Token eq = lex.next();
        if (eq.kind != Tok::Assign) {
            throw ScriptError(ErrorCode::SyntaxError, line_no, eq.column, "expected '='", "'='");
        }
        Token value = lex.next();
        EvidenceValue v;
        if (value.kind == Tok::Ident) {
            v = value.text;
        } else if (value.kind == Tok::Number || value.kind == Tok::Minus || value.kind == Tok::Plus) {
            bool negative = value.kind == Tok::Minus;
            if (value.kind != Tok::Number) value = lex.next();
            if (value.kind != Tok::Number) {
                throw ScriptError(ErrorCode::SyntaxError, line_no, value.column, "expected a number", "number");
            }
            double d = to_double(value.text);
            v = negative ? -d : d;
        } else {
            throw ScriptError(ErrorCode::SyntaxError, line_no, value.column, "expected a state name or number",
                              "identifier or number");
        }
        Token rest = lex.next();
        if (rest.kind == Tok::Semicolon) rest = lex.next();
        if (rest.kind != Tok::End) {
            throw ScriptError(ErrorCode::SyntaxError, line_no, rest.column, "unexpected text after assignment",
                              "end of line");
        }
        if (!ev.assignments.emplace(name.text, std::move(v)).second) {
            throw ScriptError(ErrorCode::DuplicateAssignment, line_no, name.column,
                              "variable '" + name.text + "' is assigned twice");
        }
        if (eol == text.size()) break;
    }
    return ev;
}

}  // namespace bayescloud::script
