#include "contpass/ast.hpp"

#include <sstream>

namespace contpass {

std::string render(const Diagnostic& d) {
    std::ostringstream os;
    os << d.span.line << ':' << d.span.column << ": " << d.code << ": " << d.message;
    return os.str();
}

std::string Value::to_string() const {
    if (is_unit()) return "unit";
    if (is_bool()) return as_bool() ? "true" : "false";
    return std::to_string(as_int());
}

const char* spelling(BinOpKind op) {
    switch (op) {
        case BinOpKind::add: return "+";
        case BinOpKind::sub: return "-";
        case BinOpKind::lt: return "<";
        case BinOpKind::eq: return "==";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// equality

bool operator==(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    if (auto* l = as<Expr::Lit>(a)) return l->value == as<Expr::Lit>(b)->value;
    if (auto* v = as<Expr::Var>(a)) return v->name == as<Expr::Var>(b)->name;
    auto& x = std::get<Expr::BinOp>(a.node);
    auto& y = std::get<Expr::BinOp>(b.node);
    return x.op == y.op && *x.left == *y.left && *x.right == *y.right;
}

bool same(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return *a == *b;
}

bool operator==(const Term& a, const Term& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Term::E>) {
                return *x.expr == *y.expr;
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                return x.var == y.var && same(x.rhs, y.rhs);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                return same(x.cond, y.cond) && same(x.then_branch, y.then_branch) &&
                       same(x.else_branch, y.else_branch);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                return same(x.first, y.first) && same(x.second, y.second);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                return x.fun == y.fun && x.params == y.params && same(x.body, y.body) &&
                       same(x.cont, y.cont);
            } else {
                if (x.fun != y.fun || x.args.size() != y.args.size()) return false;
                for (std::size_t i = 0; i < x.args.size(); ++i)
                    if (!same(x.args[i], y.args[i])) return false;
                return true;
            }
        },
        a.node);
}

// ---------------------------------------------------------------------------
// builders

namespace mk {

ExprPtr lit(Value v) { return std::make_shared<const Expr>(Expr{Expr::Lit{v}}); }
ExprPtr int_(std::int64_t n) { return lit(Value::integer(n)); }
ExprPtr bool_(bool b) { return lit(Value::boolean(b)); }
ExprPtr unit() { return lit(Value::unit()); }
ExprPtr var(std::string name) {
    return std::make_shared<const Expr>(Expr{Expr::Var{std::move(name)}});
}
ExprPtr binop(BinOpKind op, ExprPtr l, ExprPtr r) {
    return std::make_shared<const Expr>(Expr{Expr::BinOp{op, std::move(l), std::move(r)}});
}

static TermPtr make(Term::Node node, SourceSpan span) {
    return std::make_shared<const Term>(Term{std::move(node), span});
}

TermPtr e(ExprPtr expr, SourceSpan span) { return make(Term::E{std::move(expr)}, span); }
TermPtr assign(std::string var, TermPtr rhs, SourceSpan span) {
    return make(Term::Assign{std::move(var), std::move(rhs)}, span);
}
TermPtr ite(TermPtr cond, TermPtr then_branch, TermPtr else_branch, SourceSpan span) {
    return make(Term::If{std::move(cond), std::move(then_branch), std::move(else_branch)}, span);
}
TermPtr seq(TermPtr first, TermPtr second, SourceSpan span) {
    return make(Term::Seq{std::move(first), std::move(second)}, span);
}
TermPtr letrec(std::string fun, std::vector<std::string> params, TermPtr body, TermPtr cont,
               SourceSpan span) {
    return make(Term::LetRec{std::move(fun), std::move(params), std::move(body), std::move(cont)},
                span);
}
TermPtr call(std::string fun, std::vector<TermPtr> args, SourceSpan span) {
    return make(Term::Call{std::move(fun), std::move(args)}, span);
}

}  // namespace mk

// ---------------------------------------------------------------------------
// printing
//
// Expressions: "<"/"==" bind loosest and do not chain, "+"/"-" are left
// associative. Terms: ";" is right associative and looser than ":=".
// A letrec (or an assignment ending in one) swallows everything to its
// right, so it is parenthesized whenever a ";" follows it.

namespace {

int precedence(BinOpKind op) {
    return (op == BinOpKind::lt || op == BinOpKind::eq) ? 1 : 2;
}

void print_expr(std::ostream& os, const Expr& e, int min_prec) {
    if (auto* l = as<Expr::Lit>(e)) {
        os << l->value.to_string();
    } else if (auto* v = as<Expr::Var>(e)) {
        os << v->name;
    } else {
        auto& b = std::get<Expr::BinOp>(e.node);
        int p = precedence(b.op);
        bool paren = p < min_prec;
        if (paren) os << '(';
        print_expr(os, *b.left, 2);
        os << ' ' << spelling(b.op) << ' ';
        print_expr(os, *b.right, p == 1 ? 2 : 3);
        if (paren) os << ')';
    }
}

bool open_ended(const Term& t) {
    if (as<Term::LetRec>(t)) return true;
    if (auto* a = as<Term::Assign>(t)) return open_ended(*a->rhs);
    return false;
}

void print_seq_level(std::ostream& os, const Term& t);

void print_stmt_level(std::ostream& os, const Term& t, bool followed) {
    if (as<Term::Seq>(t) || (followed && open_ended(t))) {
        os << '(';
        print_seq_level(os, t);
        os << ')';
        return;
    }
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                print_expr(os, *x.expr, 1);
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                os << x.var << " := ";
                print_stmt_level(os, *x.rhs, followed);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                os << "if ";
                print_seq_level(os, *x.cond);
                os << " then { ";
                print_seq_level(os, *x.then_branch);
                os << " } else { ";
                print_seq_level(os, *x.else_branch);
                os << " }";
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                os << "letrec " << x.fun << '(';
                for (std::size_t i = 0; i < x.params.size(); ++i)
                    os << (i ? ", " : "") << x.params[i];
                os << ") = { ";
                print_seq_level(os, *x.body);
                os << " } in ";
                print_seq_level(os, *x.cont);
            } else if constexpr (std::is_same_v<T, Term::Call>) {
                os << x.fun << '(';
                for (std::size_t i = 0; i < x.args.size(); ++i) {
                    if (i) os << ", ";
                    print_seq_level(os, *x.args[i]);
                }
                os << ')';
            }
        },
        t.node);
}

void print_seq_level(std::ostream& os, const Term& t) {
    if (auto* s = as<Term::Seq>(t)) {
        print_stmt_level(os, *s->first, true);
        os << "; ";
        print_seq_level(os, *s->second);
        return;
    }
    print_stmt_level(os, t, false);
}

}  // namespace

std::string pretty_print(const Expr& e) {
    std::ostringstream os;
    print_expr(os, e, 1);
    return os.str();
}

std::string pretty_print(const Term& t) {
    std::ostringstream os;
    print_seq_level(os, t);
    return os.str();
}

// ---------------------------------------------------------------------------
// free variables and substitution

namespace {

void collect_free(const Expr& e, IdentSet& out) {
    if (auto* v = as<Expr::Var>(e)) {
        out.insert(v->name);
    } else if (auto* b = as<Expr::BinOp>(e)) {
        collect_free(*b->left, out);
        collect_free(*b->right, out);
    }
}

void collect_free(const Term& t, IdentSet& out) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                collect_free(*x.expr, out);
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                out.insert(x.var);
                collect_free(*x.rhs, out);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                collect_free(*x.cond, out);
                collect_free(*x.then_branch, out);
                collect_free(*x.else_branch, out);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                collect_free(*x.first, out);
                collect_free(*x.second, out);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                IdentSet body;
                collect_free(*x.body, body);
                for (auto& p : x.params) body.erase(p);
                out.insert(body.begin(), body.end());
                collect_free(*x.cont, out);
            } else {
                for (auto& a : x.args) collect_free(*a, out);
            }
        },
        t.node);
}

}  // namespace

IdentSet free_vars(const Term& t) {
    IdentSet out;
    collect_free(t, out);
    return out;
}

IdentSet free_vars(const Expr& e) {
    IdentSet out;
    collect_free(e, out);
    return out;
}

ExprPtr subst_values(const ExprPtr& e, const std::map<std::string, Value>& binding) {
    if (binding.empty()) return e;
    if (auto* v = as<Expr::Var>(*e)) {
        auto it = binding.find(v->name);
        return it == binding.end() ? e : mk::lit(it->second);
    }
    if (auto* b = as<Expr::BinOp>(*e))
        return mk::binop(b->op, subst_values(b->left, binding), subst_values(b->right, binding));
    return e;
}

TermPtr subst_values(const TermPtr& t, const std::map<std::string, Value>& binding) {
    if (binding.empty()) return t;
    return std::visit(
        [&](const auto& x) -> TermPtr {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                return mk::e(subst_values(x.expr, binding), t->span);
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                return mk::assign(x.var, subst_values(x.rhs, binding), t->span);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                return mk::ite(subst_values(x.cond, binding), subst_values(x.then_branch, binding),
                               subst_values(x.else_branch, binding), t->span);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                return mk::seq(subst_values(x.first, binding), subst_values(x.second, binding),
                               t->span);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                auto inner = binding;
                for (auto& p : x.params) inner.erase(p);
                return mk::letrec(x.fun, x.params, subst_values(x.body, inner),
                                  subst_values(x.cont, binding), t->span);
            } else {
                std::vector<TermPtr> args;
                args.reserve(x.args.size());
                for (auto& a : x.args) args.push_back(subst_values(a, binding));
                return mk::call(x.fun, std::move(args), t->span);
            }
        },
        t->node);
}

namespace {
std::size_t expr_count(const Expr& e) {
    if (auto* b = as<Expr::BinOp>(e)) return 1 + expr_count(*b->left) + expr_count(*b->right);
    return 1;
}
}  // namespace

std::size_t node_count(const Term& t) {
    return std::visit(
        [&](const auto& x) -> std::size_t {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                return expr_count(*x.expr);
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                return 1 + node_count(*x.rhs);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                return 1 + node_count(*x.cond) + node_count(*x.then_branch) +
                       node_count(*x.else_branch);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                return 1 + node_count(*x.first) + node_count(*x.second);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                return 1 + x.params.size() + node_count(*x.body) + node_count(*x.cont);
            } else {
                std::size_t n = 1;
                for (auto& a : x.args) n += node_count(*a);
                return n;
            }
        },
        t.node);
}

}  // namespace contpass
