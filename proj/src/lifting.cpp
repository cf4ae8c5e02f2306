#include "contpass/lifting.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "contpass/parser.hpp"

namespace contpass {

// ---------------------------------------------------------------------------
// positions

namespace {

std::vector<const Term*> children(const Term& t) {
    return std::visit(
        [](const auto& x) -> std::vector<const Term*> {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::E>) {
                return {};
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                return {x.rhs.get()};
            } else if constexpr (std::is_same_v<T, Term::If>) {
                return {x.cond.get(), x.then_branch.get(), x.else_branch.get()};
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                return {x.first.get(), x.second.get()};
            } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                return {x.body.get(), x.cont.get()};
            } else {
                std::vector<const Term*> out;
                for (auto& a : x.args) out.push_back(a.get());
                return out;
            }
        },
        t.node);
}

void collect_tail(const Term& t, Position& at, PositionSet& out) {
    out.insert(at);
    auto descend = [&](int i, const Term& c) {
        at.push_back(i);
        collect_tail(c, at, out);
        at.pop_back();
    };
    if (auto* i = as<Term::If>(t)) {
        descend(1, *i->then_branch);
        descend(2, *i->else_branch);
    } else if (auto* s = as<Term::Seq>(t)) {
        descend(1, *s->second);
    } else if (auto* l = as<Term::LetRec>(t)) {
        descend(1, *l->cont);
    }
}

void collect_local(const Term& t, Position& at, PositionSet& out) {
    out.insert(at);
    auto kids = children(t);
    bool letrec = as<Term::LetRec>(t) != nullptr;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (letrec && i == 0) continue;
        at.push_back(static_cast<int>(i));
        collect_local(*kids[i], at, out);
        at.pop_back();
    }
}

}  // namespace

PositionSet tail_positions(const Term& t) {
    PositionSet out;
    Position at;
    collect_tail(t, at, out);
    return out;
}

PositionSet local_positions(const Term& t) {
    PositionSet out;
    Position at;
    collect_local(t, at, out);
    return out;
}

const Term* subterm(const Term& t, const Position& p) {
    const Term* cur = &t;
    for (int i : p) {
        auto kids = children(*cur);
        if (i < 0 || static_cast<std::size_t>(i) >= kids.size()) return nullptr;
        cur = kids[i];
    }
    return cur;
}

// ---------------------------------------------------------------------------
// targets and liftability

namespace {

const Term::LetRec* find_owner(const Term& t, const std::string& param, const std::string& owner) {
    if (auto* l = as<Term::LetRec>(t)) {
        if (l->fun == owner &&
            std::find(l->params.begin(), l->params.end(), param) != l->params.end())
            return l;
    }
    for (auto* c : children(t))
        if (auto* found = find_owner(*c, param, owner)) return found;
    return nullptr;
}

void defined_funs(const Term& t, std::set<std::string>& out) {
    if (auto* l = as<Term::LetRec>(t)) out.insert(l->fun);
    for (auto* c : children(t)) defined_funs(*c, out);
}

LiftTarget target_of(const Term::LetRec& owner, const std::string& param) {
    LiftTarget target{param, owner.fun, {}};
    defined_funs(*owner.body, target.inner_funs);
    return target;
}

// Walks a function body. `tail` says whether t is in tail position of the
// innermost enclosing function body; `scope` counts inner functions in scope.
class LiftChecker {
public:
    LiftChecker(const LiftTarget& target, LiftReport& report) : target_(target), report_(report) {}

    void walk(const Term& t, bool tail) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Term::Assign>) {
                    walk(*x.rhs, false);
                } else if constexpr (std::is_same_v<T, Term::If>) {
                    walk(*x.cond, false);
                    walk(*x.then_branch, tail);
                    walk(*x.else_branch, tail);
                } else if constexpr (std::is_same_v<T, Term::Seq>) {
                    walk(*x.first, false);
                    walk(*x.second, tail);
                } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                    bool inner = target_.inner_funs.count(x.fun) > 0;
                    if (inner) ++scope_[x.fun];
                    walk(*x.body, true);
                    walk(*x.cont, tail);
                    if (inner) --scope_[x.fun];
                } else if constexpr (std::is_same_v<T, Term::Call>) {
                    auto it = scope_.find(x.fun);
                    if (!tail && it != scope_.end() && it->second > 0) {
                        report_.liftable = false;
                        report_.violations.push_back(
                            Violation{t.span, pretty_print(t),
                                      "call to inner function '" + x.fun +
                                          "' is not in tail position"});
                    }
                    for (auto& a : x.args) walk(*a, false);
                }
            },
            t.node);
    }

private:
    const LiftTarget& target_;
    LiftReport& report_;
    std::map<std::string, int> scope_;
};

std::string describe(const LiftReport& r) {
    std::ostringstream os;
    os << "parameter '" << r.target.param << "' of '" << r.target.owner << "' is not liftable";
    for (auto& v : r.violations) os << "; " << v.call << ": " << v.reason;
    return os.str();
}

}  // namespace

LiftTarget make_target(const Term& t, const std::string& param, const std::string& owner) {
    auto* l = find_owner(t, param, owner);
    if (!l)
        throw Error(ErrorCode::target_not_found,
                    "no function '" + owner + "' with parameter '" + param + "'");
    return target_of(*l, param);
}

LiftReport check_liftable(const Term& t, const LiftTarget& target) {
    auto* owner = find_owner(t, target.param, target.owner);
    if (!owner)
        throw Error(ErrorCode::target_not_found,
                    "no function '" + target.owner + "' with parameter '" + target.param + "'");
    LiftReport report{target, true, {}};
    LiftChecker(target, report).walk(*owner->body, true);
    return report;
}

NotLiftable::NotLiftable(LiftReport r)
    : Error(ErrorCode::not_liftable, describe(r)), report_(std::move(r)) {}

// ---------------------------------------------------------------------------
// lifting

namespace {

class Lifter {
public:
    explicit Lifter(const LiftTarget& target) : target_(target) {}

    TermPtr term(const TermPtr& t) {
        return std::visit(
            [&](const auto& x) -> TermPtr {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Term::E>) {
                    return t;
                } else if constexpr (std::is_same_v<T, Term::Assign>) {
                    return mk::assign(x.var, term(x.rhs), t->span);
                } else if constexpr (std::is_same_v<T, Term::If>) {
                    return mk::ite(term(x.cond), term(x.then_branch), term(x.else_branch),
                                   t->span);
                } else if constexpr (std::is_same_v<T, Term::Seq>) {
                    return mk::seq(term(x.first), term(x.second), t->span);
                } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                    auto params = x.params;
                    if (inner(x.fun)) params.push_back(target_.param);
                    return mk::letrec(x.fun, std::move(params), term(x.body), term(x.cont),
                                      t->span);
                } else {
                    std::vector<TermPtr> args;
                    for (auto& a : x.args) args.push_back(term(a));
                    if (inner(x.fun)) args.push_back(mk::var_term(target_.param));
                    return mk::call(x.fun, std::move(args), t->span);
                }
            },
            t->node);
    }

    // Rebuilds t, lifting only inside the body of the owner node.
    TermPtr around(const TermPtr& t, const Term* owner) {
        if (t.get() == owner) {
            auto& l = std::get<Term::LetRec>(t->node);
            return mk::letrec(l.fun, l.params, term(l.body), l.cont, t->span);
        }
        return std::visit(
            [&](const auto& x) -> TermPtr {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Term::E>) {
                    return t;
                } else if constexpr (std::is_same_v<T, Term::Assign>) {
                    return mk::assign(x.var, around(x.rhs, owner), t->span);
                } else if constexpr (std::is_same_v<T, Term::If>) {
                    return mk::ite(around(x.cond, owner), around(x.then_branch, owner),
                                   around(x.else_branch, owner), t->span);
                } else if constexpr (std::is_same_v<T, Term::Seq>) {
                    return mk::seq(around(x.first, owner), around(x.second, owner), t->span);
                } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                    return mk::letrec(x.fun, x.params, around(x.body, owner),
                                      around(x.cont, owner), t->span);
                } else {
                    std::vector<TermPtr> args;
                    for (auto& a : x.args) args.push_back(around(a, owner));
                    return mk::call(x.fun, std::move(args), t->span);
                }
            },
            t->node);
    }

private:
    bool inner(const std::string& f) const { return target_.inner_funs.count(f) > 0; }

    const LiftTarget& target_;
};

const Term* find_owner_node(const Term& t, const std::string& param, const std::string& owner) {
    if (auto* l = as<Term::LetRec>(t)) {
        if (l->fun == owner &&
            std::find(l->params.begin(), l->params.end(), param) != l->params.end())
            return &t;
    }
    for (auto* c : children(t))
        if (auto* found = find_owner_node(*c, param, owner)) return found;
    return nullptr;
}

}  // namespace

TermPtr lift_term(const TermPtr& t, const LiftTarget& target) { return Lifter(target).term(t); }

TermPtr lift_param(const TermPtr& t, const LiftTarget& target) {
    auto report = check_liftable(*t, target);
    if (!report.liftable) throw NotLiftable(std::move(report));
    const Term* owner = find_owner_node(*t, target.param, target.owner);
    return Lifter(target).around(t, owner);
}

namespace {

struct Candidate {
    std::size_t depth;
    std::string param;
    std::string owner;
    const Term* node;  // the owner letrec
};

using Binders = std::map<std::string, std::vector<std::pair<const Term*, std::size_t>>>;

// binders: innermost (owner node, depth) for each parameter name in scope
void find_candidates(const Term& t, Binders& binders, std::size_t depth,
                     std::vector<Candidate>& out) {
    if (auto* l = as<Term::LetRec>(t)) {
        for (auto& x : free_vars(*l->body)) {
            if (std::find(l->params.begin(), l->params.end(), x) != l->params.end()) continue;
            auto it = binders.find(x);
            if (it == binders.end() || it->second.empty()) continue;  // free in the whole term
            auto [owner, owner_depth] = it->second.back();
            out.push_back(Candidate{owner_depth, x, as<Term::LetRec>(*owner)->fun, owner});
        }
        for (auto& p : l->params) binders[p].emplace_back(&t, depth);
        find_candidates(*l->body, binders, depth + 1, out);
        for (auto& p : l->params) binders[p].pop_back();
        find_candidates(*l->cont, binders, depth, out);
        return;
    }
    for (auto* c : children(t)) find_candidates(*c, binders, depth, out);
}

std::vector<Candidate> candidates(const Term& t) {
    Binders binders;
    std::vector<Candidate> out;
    find_candidates(t, binders, 0, out);
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.depth, a.param, a.owner) < std::tie(b.depth, b.param, b.owner);
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Candidate& a, const Candidate& b) {
                              return a.node == b.node && a.param == b.param;
                          }),
              out.end());
    return out;
}

}  // namespace

std::vector<LiftTarget> lift_candidates(const Term& t) {
    std::vector<LiftTarget> out;
    for (auto& c : candidates(t)) out.push_back(target_of(std::get<Term::LetRec>(c.node->node), c.param));
    return out;
}

TermPtr lift_all(const TermPtr& t, std::size_t max_rounds) {
    TermPtr cur = t;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        auto cands = candidates(*cur);
        if (cands.empty()) return cur;
        auto& c = cands.front();
        auto& owner = std::get<Term::LetRec>(c.node->node);
        LiftTarget target = target_of(owner, c.param);
        LiftReport report{target, true, {}};
        LiftChecker(target, report).walk(*owner.body, true);
        if (!report.liftable) throw NotLiftable(std::move(report));
        cur = Lifter(target).around(cur, c.node);
    }
    throw Error(ErrorCode::no_fixpoint,
                "lifting did not converge after " + std::to_string(max_rounds) + " rounds");
}

// ---------------------------------------------------------------------------
// alpha renaming

namespace {

class Renamer {
public:
    explicit Renamer(const Term& t) { collect_names(t); }

    TermPtr term(const TermPtr& t) {
        return std::visit(
            [&](const auto& x) -> TermPtr {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Term::E>) {
                    return mk::e(expr(x.expr), t->span);
                } else if constexpr (std::is_same_v<T, Term::Assign>) {
                    return mk::assign(name(x.var), term(x.rhs), t->span);
                } else if constexpr (std::is_same_v<T, Term::If>) {
                    return mk::ite(term(x.cond), term(x.then_branch), term(x.else_branch),
                                   t->span);
                } else if constexpr (std::is_same_v<T, Term::Seq>) {
                    return mk::seq(term(x.first), term(x.second), t->span);
                } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                    std::vector<std::string> params;
                    for (auto& p : x.params) {
                        std::string fresh = declared_.insert(p).second ? p : fresh_name(p);
                        map_[p].push_back(fresh);
                        params.push_back(fresh);
                    }
                    TermPtr body = term(x.body);
                    for (auto& p : x.params) map_[p].pop_back();
                    return mk::letrec(x.fun, std::move(params), body, term(x.cont), t->span);
                } else {
                    std::vector<TermPtr> args;
                    for (auto& a : x.args) args.push_back(term(a));
                    return mk::call(x.fun, std::move(args), t->span);
                }
            },
            t->node);
    }

private:
    void collect_names(const Term& t) {
        for (auto& x : free_vars(t)) used_.insert(x);
        if (auto* l = as<Term::LetRec>(t)) {
            used_.insert(l->fun);
            for (auto& p : l->params) used_.insert(p);
        }
        for (auto* c : children(t)) collect_names(*c);
    }

    std::string fresh_name(const std::string& base) {
        for (std::size_t i = 1;; ++i) {
            std::string n = base + "_" + std::to_string(i);
            if (!used_.count(n)) {
                used_.insert(n);
                declared_.insert(n);
                return n;
            }
        }
    }

    std::string name(const std::string& x) const {
        auto it = map_.find(x);
        return it == map_.end() || it->second.empty() ? x : it->second.back();
    }

    ExprPtr expr(const ExprPtr& e) {
        if (auto* v = as<Expr::Var>(*e)) return mk::var(name(v->name));
        if (auto* b = as<Expr::BinOp>(*e)) return mk::binop(b->op, expr(b->left), expr(b->right));
        return e;
    }

    std::set<std::string> used_;
    std::set<std::string> declared_;
    std::map<std::string, std::vector<std::string>> map_;
};

}  // namespace

TermPtr alpha_rename(const TermPtr& t) { return Renamer(*t).term(t); }

// ---------------------------------------------------------------------------
// block floating

namespace {

class Floater {
public:
    TermPtr strip(const TermPtr& t) {
        return std::visit(
            [&](const auto& x) -> TermPtr {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Term::E>) {
                    return t;
                } else if constexpr (std::is_same_v<T, Term::Assign>) {
                    return mk::assign(x.var, strip(x.rhs), t->span);
                } else if constexpr (std::is_same_v<T, Term::If>) {
                    return mk::ite(strip(x.cond), strip(x.then_branch), strip(x.else_branch),
                                   t->span);
                } else if constexpr (std::is_same_v<T, Term::Seq>) {
                    return mk::seq(strip(x.first), strip(x.second), t->span);
                } else if constexpr (std::is_same_v<T, Term::LetRec>) {
                    IdentSet fv = free_vars(*x.body);
                    for (auto& p : x.params) fv.erase(p);
                    if (!fv.empty())
                        throw Error(ErrorCode::not_closed,
                                    "body of '" + x.fun + "' uses free variable '" + *fv.begin() +
                                        "'");
                    if (!names_.insert(x.fun).second)
                        throw Error(ErrorCode::duplicate_function,
                                    "function '" + x.fun + "' is defined twice");
                    std::size_t slot = out_.functions.size();
                    out_.functions.push_back(FunDef{x.fun, x.params, nullptr, t->span});
                    TermPtr body = strip(x.body);
                    out_.functions[slot].body = body;
                    return strip(x.cont);
                } else {
                    std::vector<TermPtr> args;
                    for (auto& a : x.args) args.push_back(strip(a));
                    return mk::call(x.fun, std::move(args), t->span);
                }
            },
            t->node);
    }

    Program out_;
    std::set<std::string> names_;
};

}  // namespace

Program float_blocks(const TermPtr& t) {
    IdentSet fv = free_vars(*t);
    if (!fv.empty())
        throw Error(ErrorCode::not_closed, "term uses free variable '" + *fv.begin() + "'");
    Floater f;
    f.out_.main = f.strip(t);
    return std::move(f.out_);
}

// ---------------------------------------------------------------------------
// lifted environments

FunEnv EnvLifter::lift(const FunEnv& funs) {
    FunEnv out;
    for (auto& [name, c] : funs) {
        auto it = lifted_.find(c.get());
        if (it == lifted_.end()) {
            bool inner = target_.inner_funs.count(name) > 0;
            auto params = c->params;
            VarEnv captured = c->captured_vars;
            if (inner) {
                params.push_back(target_.param);
                captured = captured.without({target_.param});
            }
            auto lifted = std::make_shared<const Closure>(Closure{
                std::move(params), lift_term(c->body, target_), std::move(captured),
                lift(c->captured_funs)});
            it = lifted_.emplace(c.get(), std::make_pair(c, std::move(lifted))).first;
        }
        out.emplace(name, it->second.second);
    }
    return out;
}

std::size_t EnvLifter::param_occurrences(const FunEnv& funs) {
    FunEnv lifted = lift(funs);
    std::size_t total = 0;
    std::function<std::size_t(const ClosurePtr&)> count = [&](const ClosurePtr& c) -> std::size_t {
        auto it = occurrences_.find(c.get());
        if (it != occurrences_.end()) return it->second;
        std::size_t n = c->captured_vars.contains(target_.param) ? 1 : 0;
        for (auto& [_, inner] : c->captured_funs) n += count(inner);
        occurrences_.emplace(c.get(), n);
        return n;
    };
    for (auto& [_, c] : lifted) total += count(c);
    return total;
}

}  // namespace contpass
