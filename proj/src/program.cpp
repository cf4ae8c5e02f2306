#include "contpass/program.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "contpass/error.hpp"
#include "syntax.hpp"

namespace contpass {

const FunDef* Program::find(std::string_view name) const {
    for (auto& f : functions)
        if (f.name == name) return &f;
    return nullptr;
}

bool operator==(const FunDef& a, const FunDef& b) {
    return a.name == b.name && a.params == b.params && same(a.body, b.body);
}

bool operator==(const Program& a, const Program& b) {
    return a.functions == b.functions && same(a.main, b.main);
}

std::string print_program(const Program& p) {
    std::ostringstream os;
    for (auto& f : p.functions) {
        os << "def " << f.name << "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) os << (i ? ", " : "") << f.params[i];
        os << ") = { " << pretty_print(*f.body) << " }\n";
    }
    os << "main { " << pretty_print(*p.main) << " }\n";
    return os.str();
}

ProgramParseResult parse_program(std::string_view src) {
    try {
        syntax::Parser ps(src);
        Program prog;
        while (ps.at_word("def")) {
            SourceSpan start = ps.peek().span;
            ps.advance();
            FunDef f;
            f.name = ps.ident("function name");
            ps.expect(syntax::Tok::lparen, "'('");
            f.params = ps.params();
            ps.expect(syntax::Tok::rparen, "')'");
            ps.expect(syntax::Tok::equals, "'='");
            ps.expect(syntax::Tok::lbrace, "'{'");
            f.body = ps.term();
            ps.expect(syntax::Tok::rbrace, "'}'");
            f.span = ps.span_from(start);
            prog.functions.push_back(std::move(f));
        }
        ps.expect_word("main");
        ps.expect(syntax::Tok::lbrace, "'{'");
        prog.main = ps.term();
        ps.expect(syntax::Tok::rbrace, "'}'");
        ps.expect_eof();
        return {std::move(prog), {}};
    } catch (const syntax::ParseFailure& f) {
        return {std::nullopt, {f.diag}};
    }
}

bool looks_like_program(std::string_view src) {
    try {
        auto toks = syntax::lex(src);
        return toks.front().kind == syntax::Tok::ident &&
               (toks.front().text == "def" || toks.front().text == "main");
    } catch (const syntax::ParseFailure&) {
        return false;
    }
}

namespace {

void check_body(const Term& t, const Program& p, const SourceSpan& where,
                std::vector<Diagnostic>& out) {
    auto diag = [&](const char* code, std::string msg) {
        out.push_back(Diagnostic{t.span.known() ? t.span : where, Severity::error, code,
                                 std::move(msg)});
    };
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                check_body(*x.rhs, p, where, out);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                check_body(*x.cond, p, where, out);
                check_body(*x.then_branch, p, where, out);
                check_body(*x.else_branch, p, where, out);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                check_body(*x.first, p, where, out);
                check_body(*x.second, p, where, out);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                diag("SCOPE_NESTED_LETREC", "program bodies cannot define local functions");
            } else {
                const FunDef* f = p.find(x.fun);
                if (!f)
                    diag("SCOPE_UNBOUND_FUN", "unbound function '" + x.fun + "'");
                else if (f->params.size() != x.args.size())
                    diag("SCOPE_ARITY", "'" + x.fun + "' expects " +
                                            std::to_string(f->params.size()) + " arguments, got " +
                                            std::to_string(x.args.size()));
                for (auto& a : x.args) check_body(*a, p, where, out);
            }
        },
        t.node);
}

}  // namespace

std::vector<Diagnostic> validate_program(const Program& p) {
    std::vector<Diagnostic> out;
    std::set<std::string> names;
    auto scope = [&](const Term& body, const std::vector<std::string>& params,
                     const SourceSpan& where) {
        IdentSet fv = free_vars(body);
        for (auto& x : params) fv.erase(x);
        for (auto& x : fv)
            out.push_back(Diagnostic{where, Severity::error, "SCOPE_UNBOUND_VAR",
                                     "unbound variable '" + x + "'"});
        check_body(body, p, where, out);
    };
    for (auto& f : p.functions) {
        if (!names.insert(f.name).second)
            out.push_back(Diagnostic{f.span, Severity::error, "UNIQ_FUNCTION",
                                     "function '" + f.name + "' is defined more than once"});
        scope(*f.body, f.params, f.span);
    }
    scope(*p.main, {}, p.main->span);
    return out;
}

namespace {

void callees(const Term& t, std::set<std::string>& out) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::Call>) {
                out.insert(x.fun);
                for (auto& a : x.args) callees(*a, out);
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                callees(*x.rhs, out);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                callees(*x.cond, out);
                callees(*x.then_branch, out);
                callees(*x.else_branch, out);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                callees(*x.first, out);
                callees(*x.second, out);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                callees(*x.body, out);
                callees(*x.cont, out);
            }
        },
        t.node);
}

}  // namespace

TermPtr unfloat(const Program& p) {
    // 0 unvisited, 1 on the current path, 2 placed
    std::vector<int> mark(p.functions.size(), 0);
    std::vector<std::size_t> order;
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
        mark[i] = 1;
        std::set<std::string> called;
        callees(*p.functions[i].body, called);
        for (std::size_t j = 0; j < p.functions.size(); ++j) {
            if (j == i || !called.count(p.functions[j].name)) continue;
            if (mark[j] == 1)
                throw Error(ErrorCode::not_closed, "'" + p.functions[j].name + "' and '" + p.functions[i].name +
                                                       "' are mutually recursive");
            if (mark[j] == 0) visit(j);
        }
        mark[i] = 2;
        order.push_back(i);
    };
    for (std::size_t i = 0; i < p.functions.size(); ++i)
        if (mark[i] == 0) visit(i);

    TermPtr out = p.main;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto& f = p.functions[*it];
        out = mk::letrec(f.name, f.params, f.body, out, f.span);
    }
    return out;
}

}  // namespace contpass
