#include <compare>
#include <vector>

#include "contpass/harness.hpp"
#include "contpass/parser.hpp"

namespace contpass {

namespace {

std::vector<TermPtr> kids(const Term& t) {
    return std::visit(
        [](const auto& x) -> std::vector<TermPtr> {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                return {};
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                return {x.rhs};
            } else if constexpr (std::is_same_v<T, Term::If>) {
                return {x.cond, x.then_branch, x.else_branch};
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                return {x.first, x.second};
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                return {x.body, x.cont};
            } else {
                return x.args;
            }
        },
        t.node);
}

TermPtr with_kid(const TermPtr& t, std::size_t i, TermPtr k) {
    return std::visit(
        [&](const auto& x) -> TermPtr {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                return t;
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                return mk::assign(x.var, k);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                return mk::ite(i == 0 ? k : x.cond, i == 1 ? k : x.then_branch, i == 2 ? k : x.else_branch);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                return mk::seq(i == 0 ? k : x.first, i == 1 ? k : x.second);
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                return mk::letrec(x.fun, x.params, i == 0 ? k : x.body, i == 1 ? k : x.cont);
            } else {
                auto args = x.args;
                args[i] = k;
                return mk::call(x.fun, std::move(args));
            }
        },
        t->node);
}

// Drops the i-th argument of every call to fun.
TermPtr drop_arg(const TermPtr& t, const std::string& fun, std::size_t i) {
    auto ks = kids(*t);
    TermPtr out = t;
    for (std::size_t k = 0; k < ks.size(); ++k) {
        auto nk = drop_arg(ks[k], fun, i);
        if (nk != ks[k]) out = with_kid(out, k, nk);
    }
    if (auto* c = as<Term::Call>(*out); c && c->fun == fun && i < c->args.size()) {
        auto args = c->args;
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        out = mk::call(c->fun, std::move(args));
    }
    return out;
}

std::size_t var_uses(const Expr& e) {
    if (as<Expr::Var>(e)) return 1;
    if (auto* b = as<Expr::BinOp>(e)) return var_uses(*b->left) + var_uses(*b->right);
    return 0;
}

std::size_t var_uses(const Term& t) {
    std::size_t n = 0;
    if (auto* e = as<Term::E>(t)) n = var_uses(*e->expr);
    for (auto& k : kids(t)) n += var_uses(*k);
    return n;
}

// Lexicographic: nodes, printed length, variable uses.
struct Size {
    std::size_t nodes, chars, vars;
    auto operator<=>(const Size&) const = default;
};

Size measure(const Term& t) { return {node_count(t), pretty_print(t).size(), var_uses(t)}; }

// Smaller replacements for the node itself, most aggressive first.
std::vector<TermPtr> local_candidates(const TermPtr& t) {
    std::vector<TermPtr> out;
    auto* e = as<Term::E>(*t);
    bool literal = e && as<Expr::Lit>(*e->expr);
    if (!literal) {
        out.push_back(mk::int_term(0));
        out.push_back(mk::e(mk::bool_(true)));
    }
    if (e) {
        if (auto* b = as<Expr::BinOp>(*e->expr)) {
            out.push_back(mk::e(b->left));
            out.push_back(mk::e(b->right));
        }
        return out;
    }
    if (auto* l = as<Term::LetRec>(*t)) {
        out.push_back(l->cont);
        for (std::size_t i = 0; i < l->params.size(); ++i) {
            auto params = l->params;
            params.erase(params.begin() + static_cast<std::ptrdiff_t>(i));
            out.push_back(mk::letrec(l->fun, params, drop_arg(l->body, l->fun, i),
                                     drop_arg(l->cont, l->fun, i)));
        }
        return out;
    }
    if (auto* a = as<Term::Assign>(*t)) return {out[0], out[1], a->rhs};
    for (auto& k : kids(*t)) out.push_back(k);
    return out;
}

// Every single-step shrink of t, in pre-order.
void candidates(const TermPtr& t, std::vector<TermPtr>& out) {
    for (auto& c : local_candidates(t)) out.push_back(c);
    auto ks = kids(*t);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        std::vector<TermPtr> sub;
        candidates(ks[i], sub);
        for (auto& s : sub) out.push_back(with_kid(t, i, s));
    }
}

}  // namespace

TermPtr shrink(const TermPtr& t, const std::function<bool(const Term&)>& failing) {
    ValidateOptions relaxed{true};
    TermPtr best = t;
    bool progress = true;
    while (progress) {
        progress = false;
        std::vector<TermPtr> cands;
        candidates(best, cands);
        Size size = measure(*best);
        for (auto& c : cands) {
            if (!(measure(*c) < size)) continue;
            if (!validate(*c, relaxed).empty() || !failing(*c)) continue;
            best = c;
            progress = true;
            break;
        }
    }
    return best;
}

}  // namespace contpass
