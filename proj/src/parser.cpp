#include "contpass/parser.hpp"

#include <cctype>
#include <limits>
#include <map>

#include "syntax.hpp"

namespace contpass {
namespace syntax {

namespace {

const char* describe(Tok k) {
    switch (k) {
        case Tok::ident: return "identifier";
        case Tok::integer: return "integer";
        case Tok::lparen: return "'('";
        case Tok::rparen: return "')'";
        case Tok::lbrace: return "'{'";
        case Tok::rbrace: return "'}'";
        case Tok::comma: return "','";
        case Tok::semi: return "';'";
        case Tok::assign: return "':='";
        case Tok::equals: return "'='";
        case Tok::eqeq: return "'=='";
        case Tok::plus: return "'+'";
        case Tok::minus: return "'-'";
        case Tok::less: return "'<'";
        case Tok::eof: return "end of input";
    }
    return "token";
}

std::string describe(const Token& t) {
    if (t.kind == Tok::ident || t.kind == Tok::integer) return "'" + t.text + "'";
    return describe(t.kind);
}

}  // namespace

bool is_keyword(std::string_view w) {
    return w == "letrec" || w == "in" || w == "if" || w == "then" || w == "else" ||
           w == "true" || w == "false" || w == "unit";
}

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1, col = 1;
    auto bump = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (true) {
        while (i < src.size()) {
            if (std::isspace(static_cast<unsigned char>(src[i]))) {
                bump(1);
            } else if (src.substr(i, 2) == "//") {
                while (i < src.size() && src[i] != '\n') bump(1);
            } else {
                break;
            }
        }
        SourceSpan sp{i, i, line, col};
        if (i >= src.size()) {
            out.push_back({Tok::eof, "", sp});
            return out;
        }
        char c = src[i];
        auto push = [&](Tok k, std::size_t n) {
            sp.end_offset = i + n;
            out.push_back({k, std::string(src.substr(i, n)), sp});
            bump(n);
        };
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t n = 1;
            while (i + n < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i + n])) || src[i + n] == '_'))
                ++n;
            push(Tok::ident, n);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t n = 1;
            while (i + n < src.size() && std::isdigit(static_cast<unsigned char>(src[i + n]))) ++n;
            push(Tok::integer, n);
        } else if (c == ':' && src.substr(i, 2) == ":=") {
            push(Tok::assign, 2);
        } else if (c == '=' && src.substr(i, 2) == "==") {
            push(Tok::eqeq, 2);
        } else {
            Tok k;
            switch (c) {
                case '(': k = Tok::lparen; break;
                case ')': k = Tok::rparen; break;
                case '{': k = Tok::lbrace; break;
                case '}': k = Tok::rbrace; break;
                case ',': k = Tok::comma; break;
                case ';': k = Tok::semi; break;
                case '=': k = Tok::equals; break;
                case '+': k = Tok::plus; break;
                case '-': k = Tok::minus; break;
                case '<': k = Tok::less; break;
                default: {
                    sp.end_offset = i + 1;
                    throw ParseFailure(Diagnostic{sp, Severity::error, "PARSE_UNEXPECTED_CHAR",
                                                  std::string("unexpected character '") + c +
                                                      "'"});
                }
            }
            push(k, 1);
        }
    }
}

Parser::Parser(std::string_view src) : toks_(lex(src)) {}

const Token& Parser::peek(std::size_t ahead) const {
    std::size_t k = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[k];
}

const Token& Parser::advance() {
    const Token& t = toks_[pos_];
    last_end_ = t.span.end_offset;
    if (t.kind != Tok::eof) ++pos_;
    return t;
}

void Parser::fail(const Token& at, std::string code, std::string message) const {
    throw ParseFailure(Diagnostic{at.span, Severity::error, std::move(code), std::move(message)});
}

const Token& Parser::expect(Tok k, const char* what) {
    if (peek().kind != k) {
        bool closing = k == Tok::rbrace || k == Tok::rparen;
        if (closing && peek().kind == Tok::eof)
            fail(peek(), "PARSE_UNTERMINATED",
                 std::string("missing ") + describe(k) + " before end of input");
        fail(peek(), "PARSE_UNEXPECTED_TOKEN",
             std::string("expected ") + what + ", found " + describe(peek()));
    }
    return advance();
}

void Parser::expect_word(std::string_view w) {
    if (!at_word(w))
        fail(peek(), "PARSE_UNEXPECTED_TOKEN",
             "expected '" + std::string(w) + "', found " + describe(peek()));
    advance();
}

std::string Parser::ident(const char* what) {
    if (peek().kind != Tok::ident || is_keyword(peek().text))
        fail(peek(), "PARSE_UNEXPECTED_TOKEN",
             std::string("expected ") + what + ", found " + describe(peek()));
    return advance().text;
}

std::vector<std::string> Parser::params() {
    std::vector<std::string> out;
    if (at(Tok::rparen)) return out;
    while (true) {
        const Token& at_tok = peek();
        std::string p = ident("parameter name");
        for (auto& q : out)
            if (q == p) fail(at_tok, "PARSE_DUPLICATE_PARAM", "duplicate parameter '" + p + "'");
        out.push_back(std::move(p));
        if (!at(Tok::comma)) break;
        advance();
    }
    return out;
}

void Parser::expect_eof() {
    if (!at(Tok::eof))
        fail(peek(), "PARSE_UNEXPECTED_TOKEN", "expected end of input, found " + describe(peek()));
}

SourceSpan Parser::span_from(const SourceSpan& start) const {
    return SourceSpan{start.start_offset, std::max(start.start_offset, last_end_), start.line,
                      start.column};
}

TermPtr Parser::term() {
    SourceSpan start = peek().span;
    TermPtr first = stmt();
    if (!at(Tok::semi)) return first;
    advance();
    TermPtr rest = term();
    return mk::seq(std::move(first), std::move(rest), span_from(start));
}

TermPtr Parser::stmt() {
    SourceSpan start = peek().span;
    if (at_word("letrec")) {
        advance();
        std::string name = ident("function name");
        expect(Tok::lparen, "'('");
        auto ps = params();
        expect(Tok::rparen, "')'");
        expect(Tok::equals, "'='");
        expect(Tok::lbrace, "'{'");
        TermPtr body = term();
        expect(Tok::rbrace, "'}'");
        expect_word("in");
        TermPtr cont = term();
        return mk::letrec(std::move(name), std::move(ps), std::move(body), std::move(cont),
                          span_from(start));
    }
    if (at_word("if")) {
        advance();
        TermPtr cond = term();
        expect_word("then");
        expect(Tok::lbrace, "'{'");
        TermPtr a = term();
        expect(Tok::rbrace, "'}'");
        expect_word("else");
        expect(Tok::lbrace, "'{'");
        TermPtr b = term();
        expect(Tok::rbrace, "'}'");
        return mk::ite(std::move(cond), std::move(a), std::move(b), span_from(start));
    }
    if (peek().kind == Tok::ident && !is_keyword(peek().text) && peek(1).kind == Tok::assign) {
        std::string x = advance().text;
        advance();
        TermPtr rhs = stmt();
        return mk::assign(std::move(x), std::move(rhs), span_from(start));
    }
    return comparison();
}

ExprPtr Parser::operand(const TermPtr& t, const Token& at) const {
    if (auto* e = as<Term::E>(*t)) return e->expr;
    SourceSpan sp = t->span.known() ? t->span : at.span;
    throw ParseFailure(Diagnostic{sp, Severity::error, "PARSE_NON_EXPR_OPERAND",
                                  "operands of operators must be expressions, found '" +
                                      pretty_print(*t) + "'"});
}

TermPtr Parser::comparison() {
    SourceSpan start = peek().span;
    TermPtr left = sum();
    if (at(Tok::less) || at(Tok::eqeq)) {
        Token op = advance();
        ExprPtr l = operand(left, op);
        TermPtr right = sum();
        ExprPtr r = operand(right, op);
        auto kind = op.kind == Tok::less ? BinOpKind::lt : BinOpKind::eq;
        return mk::e(mk::binop(kind, l, r), span_from(start));
    }
    return left;
}

TermPtr Parser::sum() {
    SourceSpan start = peek().span;
    TermPtr left = primary();
    while (at(Tok::plus) || at(Tok::minus)) {
        Token op = advance();
        ExprPtr l = operand(left, op);
        TermPtr right = primary();
        ExprPtr r = operand(right, op);
        auto kind = op.kind == Tok::plus ? BinOpKind::add : BinOpKind::sub;
        left = mk::e(mk::binop(kind, l, r), span_from(start));
    }
    return left;
}

namespace {

std::int64_t to_int(const Token& t, bool negative) {
    constexpr auto limit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    std::uint64_t n = 0;
    for (char c : t.text) {
        std::uint64_t d = static_cast<std::uint64_t>(c - '0');
        if (n > (limit + 1 - d) / 10) {
            throw ParseFailure(Diagnostic{t.span, Severity::error, "PARSE_INT_OVERFLOW",
                                          "integer literal out of range"});
        }
        n = n * 10 + d;
    }
    if (n > limit + (negative ? 1 : 0))
        throw ParseFailure(
            Diagnostic{t.span, Severity::error, "PARSE_INT_OVERFLOW", "integer literal out of range"});
    return negative ? static_cast<std::int64_t>(0 - n) : static_cast<std::int64_t>(n);
}

}  // namespace

TermPtr Parser::primary() {
    SourceSpan start = peek().span;
    const Token& t = peek();
    switch (t.kind) {
        case Tok::integer: {
            Token tok = advance();
            return mk::e(mk::int_(to_int(tok, false)), span_from(start));
        }
        case Tok::minus: {
            if (peek(1).kind != Tok::integer)
                fail(peek(1), "PARSE_UNEXPECTED_TOKEN",
                     "expected integer after '-', found " + describe(peek(1)));
            advance();
            Token tok = advance();
            return mk::e(mk::int_(to_int(tok, true)), span_from(start));
        }
        case Tok::lparen: {
            advance();
            TermPtr inner = term();
            expect(Tok::rparen, "')'");
            return inner;
        }
        case Tok::ident: {
            if (t.text == "true" || t.text == "false") {
                bool b = t.text == "true";
                advance();
                return mk::e(mk::bool_(b), span_from(start));
            }
            if (t.text == "unit") {
                advance();
                return mk::e(mk::unit(), span_from(start));
            }
            if (is_keyword(t.text))
                fail(t, "PARSE_UNEXPECTED_TOKEN", "unexpected keyword " + describe(t));
            std::string name = advance().text;
            if (!at(Tok::lparen)) return mk::e(mk::var(std::move(name)), span_from(start));
            advance();
            std::vector<TermPtr> args;
            if (!at(Tok::rparen)) {
                while (true) {
                    args.push_back(term());
                    if (!at(Tok::comma)) break;
                    advance();
                }
            }
            expect(Tok::rparen, "')'");
            return mk::call(std::move(name), std::move(args), span_from(start));
        }
        default:
            fail(t, "PARSE_UNEXPECTED_TOKEN", "expected a term, found " + describe(t));
    }
}

ExprPtr Parser::expression() {
    const Token& at_tok = peek();
    TermPtr t = comparison();
    return operand(t, at_tok);
}

}  // namespace syntax

ParseResult parse_term(std::string_view src) {
    try {
        syntax::Parser p(src);
        TermPtr t = p.term();
        p.expect_eof();
        return {t, {}};
    } catch (const syntax::ParseFailure& f) {
        return {nullptr, {f.diag}};
    }
}

// ---------------------------------------------------------------------------
// validation

namespace {

class Validator {
public:
    Validator(ValidateOptions opts, std::vector<Diagnostic>& out) : opts_(opts), out_(out) {}

    void run(const Term& t) { visit(t); }

private:
    void diag(const SourceSpan& sp, const char* code, std::string msg) {
        out_.push_back(Diagnostic{sp, Severity::error, code, std::move(msg)});
    }

    bool bound_var(const std::string& x) const { return vars_.count(x) && vars_.at(x) > 0; }
    const std::size_t* arity(const std::string& f) const {
        auto it = funs_.find(f);
        return it == funs_.end() || it->second.empty() ? nullptr : &it->second.back();
    }

    void visit(const Expr& e, const SourceSpan& sp) {
        for (auto& x : free_vars(e))
            if (!bound_var(x)) diag(sp, "SCOPE_UNBOUND_VAR", "unbound variable '" + x + "'");
    }

    void visit(const Term& t) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Term::E>) {
                    visit(*x.expr, t.span);
                } else if constexpr (std::is_same_v<T, Term::Assign>) {
                    if (!bound_var(x.var))
                        diag(t.span, "SCOPE_UNBOUND_VAR", "unbound variable '" + x.var + "'");
                    visit(*x.rhs);
                } else if constexpr (std::is_same_v<T, Term::If>) {
                    visit(*x.cond);
                    visit(*x.then_branch);
                    visit(*x.else_branch);
                } else if constexpr (std::is_same_v<T, Term::Seq>) {
                    visit(*x.first);
                    visit(*x.second);
                } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                    for (auto& p : x.params) {
                        if (!opts_.allow_param_shadowing && !seen_params_.insert(p).second)
                            diag(t.span, "UNIQ_PARAM",
                                 "parameter '" + p + "' is declared more than once");
                        ++vars_[p];
                    }
                    funs_[x.fun].push_back(x.params.size());
                    visit(*x.body);
                    for (auto& p : x.params) --vars_[p];
                    visit(*x.cont);
                    funs_[x.fun].pop_back();
                } else {
                    const std::size_t* n = arity(x.fun);
                    if (!n)
                        diag(t.span, "SCOPE_UNBOUND_FUN", "unbound function '" + x.fun + "'");
                    else if (*n != x.args.size())
                        diag(t.span, "SCOPE_ARITY",
                             "'" + x.fun + "' expects " + std::to_string(*n) + " arguments, got " +
                                 std::to_string(x.args.size()));
                    for (auto& a : x.args) visit(*a);
                }
            },
            t.node);
    }

    ValidateOptions opts_;
    std::vector<Diagnostic>& out_;
    std::map<std::string, int> vars_;
    std::map<std::string, std::vector<std::size_t>> funs_;
    IdentSet seen_params_;
};

}  // namespace

std::vector<Diagnostic> validate(const Term& t, ValidateOptions options) {
    std::vector<Diagnostic> out;
    Validator(options, out).run(t);
    return out;
}

}  // namespace contpass
