#include "contpass/cps.hpp"

#include <sstream>

#include "syntax.hpp"

namespace contpass {

// ---------------------------------------------------------------------------
// equality

namespace {

bool same_exprs(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(*a[i] == *b[i])) return false;
    return true;
}

template <class Tail>
bool head_equal(const Head<Tail>& a, const Head<Tail>& b) {
    using H = Head<Tail>;
    if (a.node.index() != b.node.index()) return false;
    if (auto* x = std::get_if<typename H::Leaf>(&a.node))
        return *x->expr == *std::get<typename H::Leaf>(b.node).expr;
    if (auto* x = std::get_if<typename H::AssignThen>(&a.node)) {
        auto& y = std::get<typename H::AssignThen>(b.node);
        return x->var == y.var && *x->rhs == *y.rhs && head_equal(*x->rest, *y.rest);
    }
    if (auto* x = std::get_if<typename H::Cond>(&a.node)) {
        auto& y = std::get<typename H::Cond>(b.node);
        return *x->cond == *y.cond && head_equal(*x->then_branch, *y.then_branch) &&
               head_equal(*x->else_branch, *y.else_branch);
    }
    return std::get<typename H::TailOf>(a.node).tail == std::get<typename H::TailOf>(b.node).tail;
}

template <class Body>
bool program_equal(const FlatProgram<Body>& a, const FlatProgram<Body>& b) {
    if (a.functions.size() != b.functions.size()) return false;
    for (std::size_t i = 0; i < a.functions.size(); ++i) {
        auto& f = a.functions[i];
        auto& g = b.functions[i];
        if (f.name != g.name || f.params != g.params || !(*f.body == *g.body)) return false;
    }
    return *a.main == *b.main;
}

}  // namespace

bool operator==(const NestedCall& a, const NestedCall& b) {
    if (a.fun != b.fun || !same_exprs(a.args, b.args)) return false;
    if (!a.nested || !b.nested) return !a.nested && !b.nested;
    return *a.nested == *b.nested;
}

bool operator==(const ConvTail& a, const ConvTail& b) { return a.calls == b.calls; }

bool operator==(const Push& a, const Push& b) {
    return a.fun == b.fun && a.hole == b.hole && same_exprs(a.args, b.args);
}

bool operator==(const CpsTail& a, const CpsTail& b) { return a.pushes == b.pushes; }
bool operator==(const ConvTerm& a, const ConvTerm& b) { return head_equal(a, b); }
bool operator==(const CpsTerm& a, const CpsTerm& b) { return head_equal(a, b); }
bool operator==(const ConvProgram& a, const ConvProgram& b) { return program_equal(a, b); }
bool operator==(const CpsProgram& a, const CpsProgram& b) { return program_equal(a, b); }

// ---------------------------------------------------------------------------
// recognition

namespace {

class Recognizer {
public:
    explicit Recognizer(std::vector<Diagnostic>& out) : out_(out) {}

    ConvTermPtr head(const Term& t) {
        if (auto* e = as<Term::E>(t)) return ConvTerm::leaf(e->expr);
        if (auto* l = as<Term::LetRec>(t)) {
            diag(t, "CONV_LETREC", "local function '" + l->fun + "' must be floated first");
            return nullptr;
        }
        if (auto* i = as<Term::If>(t)) {
            auto* c = as<Term::E>(*i->cond);
            if (!c)
                diag(*i->cond, "CONV_NON_EXPR_CONDITION", "condition must be an expression");
            auto a = head(*i->then_branch);
            auto b = head(*i->else_branch);
            if (!c || !a || !b) return nullptr;
            return ConvTerm::cond(c->expr, a, b);
        }
        if (auto* a = as<Term::Assign>(t)) {
            diag(t, "CONV_UNSUPPORTED", "assignment to '" + a->var + "' must be followed by a term");
            assign_rhs(*a);
            return nullptr;
        }
        if (auto* s = as<Term::Seq>(t)) {
            if (auto* a = as<Term::Assign>(*s->first)) {
                ExprPtr rhs = assign_rhs(*a);
                auto rest = head(*s->second);
                if (!rhs || !rest) return nullptr;
                return ConvTerm::assign(a->var, rhs, rest);
            }
        }
        // otherwise the whole term must be a tail
        ConvTail q;
        if (!tail(t, q)) return nullptr;
        return ConvTerm::tail(std::move(q));
    }

private:
    void diag(const Term& at, const char* code, std::string msg) {
        out_.push_back(Diagnostic{at.span, Severity::error, code, std::move(msg)});
    }

    ExprPtr assign_rhs(const Term::Assign& a) {
        if (auto* e = as<Term::E>(*a.rhs)) return e->expr;
        if (as<Term::Call>(*a.rhs))
            diag(*a.rhs, "CONV_CALL_IN_EXPR", "call outside of a tail in assignment to '" + a.var + "'");
        else
            diag(*a.rhs, "CONV_UNSUPPORTED", "assignment right-hand side must be an expression");
        return nullptr;
    }

    bool tail(const Term& t, ConvTail& q) {
        if (auto* s = as<Term::Seq>(t)) {
            bool ok = tail(*s->first, q);
            return tail(*s->second, q) && ok;
        }
        if (auto* c = as<Term::Call>(t)) {
            auto f = nested(t, *c);
            if (!f) return false;
            q.calls.push_back(std::move(*f));
            return true;
        }
        if (as<Term::E>(t) || as<Term::Assign>(t) || as<Term::If>(t)) {
            diag(t, "CONV_CALL_IN_EXPR",
                 "'" + pretty_print(t) + "' follows a call; calls must end the term");
            return false;
        }
        head(t);  // reports letrec
        return false;
    }

    std::optional<NestedCall> nested(const Term& t, const Term::Call& c) {
        NestedCall f{c.fun, {}, nullptr};
        bool ok = true;
        for (std::size_t i = 0; i < c.args.size(); ++i) {
            const Term& a = *c.args[i];
            bool last = i + 1 == c.args.size();
            if (auto* e = as<Term::E>(a)) {
                f.args.push_back(e->expr);
            } else if (auto* inner = as<Term::Call>(a)) {
                if (!last) {
                    diag(a, "CONV_NESTED_NOT_LAST",
                         "nested call to '" + inner->fun + "' must be the last argument");
                    ok = false;
                    continue;
                }
                auto g = nested(a, *inner);
                if (!g) {
                    ok = false;
                    continue;
                }
                f.nested = std::make_shared<const NestedCall>(std::move(*g));
            } else {
                diag(a, "CONV_UNSUPPORTED",
                     "argument of '" + c.fun + "' must be an expression or a call");
                ok = false;
            }
        }
        (void)t;
        if (!ok) return std::nullopt;
        return f;
    }

    std::vector<Diagnostic>& out_;
};

}  // namespace

ConvTermPtr to_convertible(const Term& t, std::vector<Diagnostic>& out) {
    return Recognizer(out).head(t);
}

ConvResult to_convertible(const Program& p) {
    ConvResult r;
    r.diagnostics = validate_program(p);
    ConvProgram out;
    bool ok = r.diagnostics.empty();
    for (auto& f : p.functions) {
        auto body = to_convertible(*f.body, r.diagnostics);
        if (!body) ok = false;
        out.functions.push_back({f.name, f.params, body});
    }
    out.main = to_convertible(*p.main, r.diagnostics);
    if (!out.main) ok = false;
    if (ok) r.program = std::move(out);
    return r;
}

// ---------------------------------------------------------------------------
// back to terms

TermPtr to_term(const NestedCall& f) {
    std::vector<TermPtr> args;
    for (auto& e : f.args) args.push_back(mk::e(e));
    if (f.nested) args.push_back(to_term(*f.nested));
    return mk::call(f.fun, std::move(args));
}

TermPtr to_term(const ConvTerm& t) {
    return std::visit(
        [](const auto& x) -> TermPtr {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ConvTerm::Leaf>) {
                return mk::e(x.expr);
            } else if constexpr (std::is_same_v<T, ConvTerm::AssignThen>) {
                return mk::seq(mk::assign(x.var, mk::e(x.rhs)), to_term(*x.rest));
            } else if constexpr (std::is_same_v<T, ConvTerm::Cond>) {
                return mk::ite(mk::e(x.cond), to_term(*x.then_branch), to_term(*x.else_branch));
            } else {
                auto& calls = x.tail.calls;
                if (calls.empty())
                    throw Error(ErrorCode::not_well_formed, "an empty tail has no term form");
                TermPtr out = to_term(calls.back());
                for (std::size_t i = calls.size() - 1; i-- > 0;)
                    out = mk::seq(to_term(calls[i]), out);
                return out;
            }
        },
        t.node);
}

Program to_program(const ConvProgram& p) {
    Program out;
    for (auto& f : p.functions) out.functions.push_back(FunDef{f.name, f.params, to_term(*f.body)});
    out.main = to_term(*p.main);
    return out;
}

TermPtr unfloat(const ConvProgram& p) { return unfloat(to_program(p)); }

// ---------------------------------------------------------------------------
// ▲ and ▼

CpsTail cps_convert(const ConvTail& q) {
    CpsTail out;
    for (std::size_t i = q.calls.size(); i-- > 0;) {
        for (const NestedCall* f = &q.calls[i]; f; f = f->nested.get())
            out.pushes.push_back(Push{f->fun, f->args, f->nested != nullptr});
    }
    return out;
}

CpsTermPtr cps_convert(const ConvTerm& t) {
    return std::visit(
        [](const auto& x) -> CpsTermPtr {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ConvTerm::Leaf>) {
                return CpsTerm::leaf(x.expr);
            } else if constexpr (std::is_same_v<T, ConvTerm::AssignThen>) {
                return CpsTerm::assign(x.var, x.rhs, cps_convert(*x.rest));
            } else if constexpr (std::is_same_v<T, ConvTerm::Cond>) {
                return CpsTerm::cond(x.cond, cps_convert(*x.then_branch),
                                     cps_convert(*x.else_branch));
            } else {
                return CpsTerm::tail(cps_convert(x.tail));
            }
        },
        t.node);
}

CpsProgram cps_convert(const ConvProgram& p) {
    CpsProgram out;
    for (auto& f : p.functions) out.functions.push_back({f.name, f.params, cps_convert(*f.body)});
    out.main = cps_convert(*p.main);
    return out;
}

bool is_well_formed(const CpsTail& q) { return q.pushes.empty() || !q.pushes.back().hole; }

bool is_well_formed(const CpsTerm& t) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, CpsTerm::Leaf>) {
                return true;
            } else if constexpr (std::is_same_v<T, CpsTerm::AssignThen>) {
                return is_well_formed(*x.rest);
            } else if constexpr (std::is_same_v<T, CpsTerm::Cond>) {
                return is_well_formed(*x.then_branch) && is_well_formed(*x.else_branch);
            } else {
                return is_well_formed(x.tail);
            }
        },
        t.node);
}

bool is_well_formed(const CpsProgram& p) {
    for (auto& f : p.functions)
        if (!is_well_formed(*f.body)) return false;
    return is_well_formed(*p.main);
}

ConvTail cps_invert(const CpsTail& q) {
    ConvTail out;
    for (std::size_t i = q.pushes.size(); i-- > 0;) {
        auto& p = q.pushes[i];
        NestedCall f{p.fun, p.args, nullptr};
        if (p.hole) {
            if (out.calls.empty())
                throw Error(ErrorCode::not_well_formed,
                            "push " + p.fun + "(..., _) is directly followed by invoke");
            f.nested = std::make_shared<const NestedCall>(std::move(out.calls.back()));
            out.calls.pop_back();
        }
        out.calls.push_back(std::move(f));
    }
    return out;
}

ConvTermPtr cps_invert(const CpsTerm& t) {
    return std::visit(
        [](const auto& x) -> ConvTermPtr {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, CpsTerm::Leaf>) {
                return ConvTerm::leaf(x.expr);
            } else if constexpr (std::is_same_v<T, CpsTerm::AssignThen>) {
                return ConvTerm::assign(x.var, x.rhs, cps_invert(*x.rest));
            } else if constexpr (std::is_same_v<T, CpsTerm::Cond>) {
                return ConvTerm::cond(x.cond, cps_invert(*x.then_branch),
                                      cps_invert(*x.else_branch));
            } else {
                return ConvTerm::tail(cps_invert(x.tail));
            }
        },
        t.node);
}

ConvProgram cps_invert(const CpsProgram& p) {
    ConvProgram out;
    for (auto& f : p.functions) out.functions.push_back({f.name, f.params, cps_invert(*f.body)});
    out.main = cps_invert(*p.main);
    return out;
}

// ---------------------------------------------------------------------------
// printing

namespace {

void print_args(std::ostream& os, const std::vector<ExprPtr>& args) {
    for (std::size_t i = 0; i < args.size(); ++i)
        os << (i ? ", " : "") << pretty_print(*args[i]);
}

void print_call(std::ostream& os, const NestedCall& f) {
    os << f.fun << "(";
    print_args(os, f.args);
    if (f.nested) {
        if (!f.args.empty()) os << ", ";
        print_call(os, *f.nested);
    }
    os << ")";
}

void print_tail(std::ostream& os, const ConvTail& q) {
    if (q.calls.empty()) {
        os << "ε";
        return;
    }
    for (std::size_t i = 0; i < q.calls.size(); ++i) {
        if (i) os << "; ";
        print_call(os, q.calls[i]);
    }
}

void print_tail(std::ostream& os, const CpsTail& q) {
    for (auto& p : q.pushes) {
        os << "push " << p.fun << "(";
        print_args(os, p.args);
        if (p.hole) os << (p.args.empty() ? "_" : ", _");
        os << "); ";
    }
    os << "invoke";
}

template <class Tail>
void print_head(std::ostream& os, const Head<Tail>& t, const char* leaf_prefix) {
    using H = Head<Tail>;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, typename H::Leaf>) {
                os << leaf_prefix << pretty_print(*x.expr);
            } else if constexpr (std::is_same_v<T, typename H::AssignThen>) {
                os << x.var << " := " << pretty_print(*x.rhs) << "; ";
                print_head(os, *x.rest, leaf_prefix);
            } else if constexpr (std::is_same_v<T, typename H::Cond>) {
                os << "if " << pretty_print(*x.cond) << " then { ";
                print_head(os, *x.then_branch, leaf_prefix);
                os << " } else { ";
                print_head(os, *x.else_branch, leaf_prefix);
                os << " }";
            } else {
                print_tail(os, x.tail);
            }
        },
        t.node);
}

template <class Body, class PrintBody>
std::string print_flat(const FlatProgram<Body>& p, PrintBody&& body) {
    std::ostringstream os;
    for (auto& f : p.functions) {
        os << "def " << f.name << "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) os << (i ? ", " : "") << f.params[i];
        os << ") = { " << body(*f.body) << " }\n";
    }
    os << "main { " << body(*p.main) << " }\n";
    return os.str();
}

}  // namespace

std::string print(const NestedCall& f) {
    std::ostringstream os;
    print_call(os, f);
    return os.str();
}

std::string print(const ConvTail& q) {
    std::ostringstream os;
    print_tail(os, q);
    return os.str();
}

std::string print(const CpsTail& q) {
    std::ostringstream os;
    print_tail(os, q);
    return os.str();
}

std::string print(const ConvTerm& t) {
    std::ostringstream os;
    print_head(os, t, "");
    return os.str();
}

std::string print(const CpsTerm& t) {
    std::ostringstream os;
    print_head(os, t, "invoke ");
    return os.str();
}

std::string print_program(const ConvProgram& p) {
    return print_flat(p, [](const ConvTerm& t) { return print(t); });
}

std::string print_program(const CpsProgram& p) {
    return print_flat(p, [](const CpsTerm& t) { return print(t); });
}

// ---------------------------------------------------------------------------
// CPS parsing

namespace {

using syntax::Tok;

class CpsParser {
public:
    explicit CpsParser(std::string_view src) : ps_(src) {}

    CpsProgram program() {
        CpsProgram prog;
        while (ps_.at_word("def")) {
            ps_.advance();
            FlatFun<CpsTermPtr> f;
            f.name = name("function name");
            ps_.expect(Tok::lparen, "'('");
            f.params = ps_.params();
            ps_.expect(Tok::rparen, "')'");
            ps_.expect(Tok::equals, "'='");
            ps_.expect(Tok::lbrace, "'{'");
            f.body = head();
            ps_.expect(Tok::rbrace, "'}'");
            prog.functions.push_back(std::move(f));
        }
        ps_.expect_word("main");
        ps_.expect(Tok::lbrace, "'{'");
        prog.main = head();
        ps_.expect(Tok::rbrace, "'}'");
        ps_.expect_eof();
        return prog;
    }

private:
    static bool reserved(std::string_view w) { return w == "push" || w == "invoke" || w == "_"; }

    std::string name(const char* what) {
        if (ps_.peek().kind == Tok::ident && reserved(ps_.peek().text))
            ps_.fail(ps_.peek(), "PARSE_UNEXPECTED_TOKEN",
                     std::string("expected ") + what + ", found '" + ps_.peek().text + "'");
        return ps_.ident(what);
    }

    bool tail_end() const { return ps_.at(Tok::rbrace) || ps_.at(Tok::eof); }

    CpsTermPtr head() {
        if (ps_.at_word("invoke")) {
            ps_.advance();
            if (tail_end()) return CpsTerm::tail(CpsTail{});
            return CpsTerm::leaf(ps_.expression());
        }
        if (ps_.at_word("push")) return CpsTerm::tail(tail());
        if (ps_.at_word("if")) {
            ps_.advance();
            ExprPtr c = ps_.expression();
            ps_.expect_word("then");
            ps_.expect(Tok::lbrace, "'{'");
            auto a = head();
            ps_.expect(Tok::rbrace, "'}'");
            ps_.expect_word("else");
            ps_.expect(Tok::lbrace, "'{'");
            auto b = head();
            ps_.expect(Tok::rbrace, "'}'");
            return CpsTerm::cond(c, a, b);
        }
        std::string x = name("'push', 'invoke', 'if' or a variable");
        ps_.expect(Tok::assign, "':='");
        ExprPtr rhs = ps_.expression();
        ps_.expect(Tok::semi, "';'");
        return CpsTerm::assign(x, rhs, head());
    }

    CpsTail tail() {
        CpsTail q;
        while (ps_.at_word("push")) {
            ps_.advance();
            Push p;
            p.fun = name("function name");
            ps_.expect(Tok::lparen, "'('");
            if (!ps_.at(Tok::rparen)) {
                while (true) {
                    if (ps_.at_word("_")) {
                        ps_.advance();
                        p.hole = true;
                        break;
                    }
                    p.args.push_back(ps_.expression());
                    if (!ps_.at(Tok::comma)) break;
                    ps_.advance();
                }
            }
            ps_.expect(Tok::rparen, "')'");
            ps_.expect(Tok::semi, "';'");
            q.pushes.push_back(std::move(p));
        }
        ps_.expect_word("invoke");
        if (!tail_end())
            ps_.fail(ps_.peek(), "PARSE_UNEXPECTED_TOKEN",
                     "a tail ends with a bare 'invoke'");
        return q;
    }

    syntax::Parser ps_;
};

}  // namespace

CpsParseResult parse_cps_program(std::string_view src) {
    try {
        return {CpsParser(src).program(), {}};
    } catch (const syntax::ParseFailure& f) {
        return {std::nullopt, {f.diag}};
    }
}

}  // namespace contpass
