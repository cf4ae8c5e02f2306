#include "contpass/bigstep.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace contpass {

const char* code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::fuel_exhausted: return "FUEL_EXHAUSTED";
        case ErrorCode::unbound_var: return "UNBOUND_VAR";
        case ErrorCode::unbound_fun: return "UNBOUND_FUN";
        case ErrorCode::dangling_location: return "DANGLING_LOCATION";
        case ErrorCode::type_error: return "TYPE_ERROR";
        case ErrorCode::arity_mismatch: return "ARITY_MISMATCH";
        case ErrorCode::monitor_violation: return "MONITOR_VIOLATION";
        case ErrorCode::stuck: return "STUCK";
        case ErrorCode::not_well_formed: return "NOT_WELL_FORMED";
        case ErrorCode::not_liftable: return "NOT_LIFTABLE";
        case ErrorCode::no_fixpoint: return "NO_FIXPOINT";
        case ErrorCode::not_closed: return "NOT_CLOSED";
        case ErrorCode::target_not_found: return "TARGET_NOT_FOUND";
        case ErrorCode::duplicate_function: return "DUPLICATE_FUNCTION";
    }
    return "ERROR";
}

// ---------------------------------------------------------------------------
// environments and stores

std::optional<Location> VarEnv::lookup(std::string_view x) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
        if (it->first == x) return it->second;
    return std::nullopt;
}

LocationSet VarEnv::image() const {
    LocationSet out;
    for (auto& [_, l] : entries_) out.insert(l);
    return out;
}

VarEnv VarEnv::without(const std::vector<std::string>& names) const {
    std::vector<Entry> kept;
    kept.reserve(entries_.size());
    for (auto& e : entries_)
        if (std::find(names.begin(), names.end(), e.first) == names.end()) kept.push_back(e);
    return VarEnv(std::move(kept));
}

VarEnv concat(const VarEnv& front, const VarEnv& back) {
    std::vector<VarEnv::Entry> all = back.entries();
    all.insert(all.end(), front.entries().begin(), front.entries().end());
    return VarEnv(std::move(all));
}

std::optional<Location> SplitEnv::lookup(std::string_view x) const {
    if (auto l = tail.lookup(x)) return l;
    return rest.lookup(x);
}

Store gc_clean(const VarEnv& env, const Store& s) {
    Store out = s;
    for (auto& [_, l] : env.entries()) out.erase(l);
    return out;
}

namespace {

template <class Visit>
void walk_closures(const FunEnv& funs, std::unordered_set<const Closure*>& seen, Visit&& visit) {
    for (auto& [_, c] : funs) {
        if (!seen.insert(c.get()).second) continue;
        visit(*c);
        walk_closures(c->captured_funs, seen, visit);
    }
}

}  // namespace

LocationSet env_locations(const FunEnv& funs) {
    LocationSet out;
    std::unordered_set<const Closure*> seen;
    walk_closures(funs, seen, [&](const Closure& c) {
        for (auto& [_, l] : c.captured_vars.entries()) out.insert(l);
    });
    return out;
}

std::vector<const VarEnv*> env_set(const FunEnv& funs) {
    std::vector<const VarEnv*> out;
    std::unordered_set<const Closure*> seen;
    walk_closures(funs, seen, [&](const Closure& c) { out.push_back(&c.captured_vars); });
    return out;
}

namespace {

FunEnv close_env_memo(const FunEnv& funs, std::map<const Closure*, ClosurePtr>& memo) {
    FunEnv out;
    for (auto& [name, c] : funs) {
        auto it = memo.find(c.get());
        if (it == memo.end()) {
            auto closed = std::make_shared<Closure>(Closure{
                c->params, c->body, c->captured_vars.without(c->params),
                close_env_memo(c->captured_funs, memo)});
            it = memo.emplace(c.get(), std::move(closed)).first;
        }
        out.emplace(name, it->second);
    }
    return out;
}

bool closure_compact(const Closure& c, std::unordered_set<const Closure*>& ok) {
    if (ok.count(&c)) return true;
    for (auto& p : c.params)
        if (c.captured_vars.contains(p)) return false;
    for (auto& [_, inner] : c.captured_funs)
        if (!closure_compact(*inner, ok)) return false;
    ok.insert(&c);
    return true;
}

}  // namespace

FunEnv close_env(const FunEnv& funs) {
    std::map<const Closure*, ClosurePtr> memo;
    return close_env_memo(funs, memo);
}

bool is_compact(const FunEnv& funs) {
    std::unordered_set<const Closure*> ok;
    for (auto& [_, c] : funs)
        if (!closure_compact(*c, ok)) return false;
    return true;
}

bool check_aliasing_free(const std::vector<const VarEnv*>& envs) {
    std::map<Location, const std::string*> owner;
    for (auto* env : envs) {
        for (auto& [x, l] : env->entries()) {
            auto [it, fresh] = owner.emplace(l, &x);
            if (!fresh && *it->second != x) return false;
        }
    }
    return true;
}

bool check_aliasing_free(const std::vector<VarEnv>& envs) {
    std::vector<const VarEnv*> ptrs;
    for (auto& e : envs) ptrs.push_back(&e);
    return check_aliasing_free(ptrs);
}

bool store_leq(const Store& s, const Store& t) {
    for (auto& [l, v] : s) {
        auto it = t.find(l);
        if (it == t.end() || !(it->second == v)) return false;
    }
    return true;
}

const char* semantics_name(Semantics s) {
    switch (s) {
        case Semantics::naive: return "naive";
        case Semantics::intermediate: return "intermediate";
        case Semantics::optimised: return "optimised";
    }
    return "?";
}

std::string to_string(const Store& s) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (auto& [l, v] : s) {
        os << (first ? "" : ", ") << "l" << l << ": " << v.to_string();
        first = false;
    }
    os << "}";
    return os.str();
}

Value apply_binop(BinOpKind op, const Value& l, const Value& r) {
    switch (op) {
        case BinOpKind::add:
        case BinOpKind::sub: {
            if (!l.is_int() || !r.is_int())
                throw Error(ErrorCode::type_error,
                            std::string("operator ") + spelling(op) + " expects integers");
            auto a = static_cast<std::uint64_t>(l.as_int());
            auto b = static_cast<std::uint64_t>(r.as_int());
            return Value::integer(static_cast<std::int64_t>(op == BinOpKind::add ? a + b : a - b));
        }
        case BinOpKind::lt:
            if (!l.is_int() || !r.is_int())
                throw Error(ErrorCode::type_error, "operator < expects integers");
            return Value::boolean(l.as_int() < r.as_int());
        case BinOpKind::eq:
            if (l.repr().index() != r.repr().index())
                throw Error(ErrorCode::type_error, "operator == expects operands of one kind");
            return Value::boolean(l == r);
    }
    throw Error(ErrorCode::type_error, "unknown operator");
}

// ---------------------------------------------------------------------------
// evaluator

namespace {

class Evaluator {
public:
    Evaluator(Semantics sem, const EvalOptions& opt) : sem_(sem), opt_(opt) {}

    EvalOutcome run(const Term& t) {
        Value v = eval(t, SplitEnv{}, FunEnv{});
        return EvalOutcome{v, std::move(store_), stats_};
    }

private:
    struct DepthGuard {
        Evaluator& ev;
        explicit DepthGuard(Evaluator& e) : ev(e) {
            if (++ev.depth_ > ev.opt_.max_depth) {
                --ev.depth_;
                throw Error(ErrorCode::fuel_exhausted, "nesting depth budget exceeded",
                            ev.stats_.steps);
            }
        }
        ~DepthGuard() { --ev.depth_; }
    };

    std::uint64_t tick() {
        if (stats_.steps >= opt_.fuel)
            throw Error(ErrorCode::fuel_exhausted, "step budget exhausted", stats_.steps);
        return ++stats_.steps;
    }

    void emit(std::uint64_t step, const char* rule, const SplitEnv& env) {
        if (opt_.trace) opt_.trace(TraceEvent{step, rule, store_.size(), env.depth()});
    }

    [[noreturn]] void fail(ErrorCode c, const std::string& msg) const {
        throw Error(c, msg, stats_.steps);
    }

    void clean(const VarEnv& tail) {
        if (sem_ == Semantics::naive) return;
        for (auto& [_, l] : tail.entries()) store_.erase(l);
    }

    static SplitEnv non_tail(const SplitEnv& env) { return SplitEnv{VarEnv{}, env.flat()}; }

    Location locate(const std::string& x, const SplitEnv& env) const {
        auto l = env.lookup(x);
        if (!l) fail(ErrorCode::unbound_var, "unbound variable '" + x + "'");
        if (!store_.count(*l))
            fail(ErrorCode::dangling_location,
                 "variable '" + x + "' refers to l" + std::to_string(*l) + " outside the store");
        return *l;
    }

    Value eval_expr(const Expr& e, const SplitEnv& env) const {
        if (auto* lit = as<Expr::Lit>(e)) return lit->value;
        if (auto* v = as<Expr::Var>(e)) return store_.at(locate(v->name, env));
        auto& b = std::get<Expr::BinOp>(e.node);
        Value l = eval_expr(*b.left, env);
        Value r = eval_expr(*b.right, env);
        try {
            return apply_binop(b.op, l, r);
        } catch (const Error& err) {
            fail(err.code(), err.detail());
        }
    }

    void write(Location l, const Value& v) {
        if (opt_.monitors.frame_locality) {
            auto it = store_.find(l);
            if (it != store_.end()) write_log_.emplace_back(l, it->second);
        }
        store_[l] = v;
    }

    Value eval(const Term& t, const SplitEnv& env, const FunEnv& funs) {
        DepthGuard guard(*this);
        return std::visit([&](const auto& node) { return rule(node, env, funs); }, t.node);
    }

    Value rule(const Term::E& n, const SplitEnv& env, const FunEnv&) {
        auto step = tick();
        Value v = eval_expr(*n.expr, env);
        bool is_val = as<Expr::Lit>(*n.expr) != nullptr;
        if (!(is_val && opt_.fault == Fault::drop_gc_at_val)) clean(env.tail);
        emit(step, is_val ? "val" : as<Expr::Var>(*n.expr) ? "var" : "expr", env);
        return v;
    }

    Value rule(const Term::Assign& n, const SplitEnv& env, const FunEnv& funs) {
        auto step = tick();
        Value v = eval(*n.rhs, non_tail(env), funs);
        write(locate(n.var, env), v);
        clean(env.tail);
        emit(step, "assign", env);
        return Value::unit();
    }

    Value rule(const Term::Seq& n, const SplitEnv& env, const FunEnv& funs) {
        auto step = tick();
        Value v;
        if (opt_.fault == Fault::swap_seq_env) {
            eval(*n.first, env, funs);
            v = eval(*n.second, non_tail(env), funs);
        } else {
            eval(*n.first, non_tail(env), funs);
            v = eval(*n.second, env, funs);
        }
        emit(step, "seq", env);
        return v;
    }

    Value rule(const Term::If& n, const SplitEnv& env, const FunEnv& funs) {
        auto step = tick();
        Value c = eval(*n.cond, non_tail(env), funs);
        if (!c.is_bool()) fail(ErrorCode::type_error, "condition is not a boolean");
        Value v = eval(c.as_bool() ? *n.then_branch : *n.else_branch, env, funs);
        emit(step, c.as_bool() ? "if-true" : "if-false", env);
        return v;
    }

    Value rule(const Term::LetRec& n, const SplitEnv& env, const FunEnv& funs) {
        auto step = tick();
        VarEnv captured = env.flat();
        if (sem_ == Semantics::optimised) captured = captured.without(n.params);
        auto closure = std::make_shared<const Closure>(Closure{n.params, n.body, captured, funs});
        if (opt_.monitors.compact && !closure_compact(*closure, compact_ok_))
            fail(ErrorCode::monitor_violation,
                 "compact: closure of '" + n.fun + "' captures one of its parameters");
        FunEnv extended = funs;
        extended[n.fun] = closure;
        Value v = eval(*n.cont, env, extended);
        emit(step, "letrec", env);
        return v;
    }

    Value rule(const Term::Call& n, const SplitEnv& env, const FunEnv& funs) {
        auto step = tick();
        auto it = funs.find(n.fun);
        if (it == funs.end()) fail(ErrorCode::unbound_fun, "unbound function '" + n.fun + "'");
        const ClosurePtr& closure = it->second;
        if (closure->params.size() != n.args.size())
            fail(ErrorCode::arity_mismatch, "'" + n.fun + "' expects " +
                                                std::to_string(closure->params.size()) +
                                                " arguments, got " + std::to_string(n.args.size()));
        ++stats_.calls;
        if (opt_.on_call) opt_.on_call(CallSite{n.fun, funs, env, store_, step});
        if (opt_.monitors.aliasing) {
            auto envs = env_set(funs);
            envs.push_back(&env.rest);
            envs.push_back(&env.tail);
            if (!check_aliasing_free(envs))
                fail(ErrorCode::monitor_violation,
                     "aliasing: two names share a location at call of '" + n.fun + "'");
        }

        SplitEnv arg_env = non_tail(env);
        std::vector<Value> args;
        args.reserve(n.args.size());
        for (auto& a : n.args) args.push_back(eval(*a, arg_env, funs));

        FunEnv callee_funs = closure->captured_funs;
        callee_funs[n.fun] = closure;

        VarEnv params;
        for (std::size_t i = 0; i < args.size(); ++i) {
            Location l = next_location_++;
            if (opt_.monitors.freshness &&
                (store_.count(l) || env_locations(callee_funs).count(l)))
                fail(ErrorCode::monitor_violation,
                     "freshness: l" + std::to_string(l) + " is already in use");
            params.bind(closure->params[i], l);
            store_[l] = args[i];
            ++stats_.fresh_allocated;
        }
        stats_.max_store = std::max(stats_.max_store, store_.size());

        Location watermark = next_location_ - args.size();
        std::size_t log_mark = write_log_.size();

        Value v = eval(*closure->body, SplitEnv{params, closure->captured_vars}, callee_funs);
        clean(env.tail);

        if (opt_.monitors.frame_locality) check_frame(n.fun, watermark, log_mark);
        emit(step, "call", env);
        return v;
    }

    // Locations below the watermark existed before the call; the store at
    // entry is ⊑ the current one iff each of them still has its entry value.
    void check_frame(const std::string& fun, Location watermark, std::size_t log_mark) {
        std::set<Location> seen;
        for (std::size_t i = log_mark; i < write_log_.size(); ++i) {
            auto& [l, old] = write_log_[i];
            if (l >= watermark || !seen.insert(l).second) continue;
            auto it = store_.find(l);
            if (it == store_.end() || !(it->second == old))
                fail(ErrorCode::monitor_violation,
                     "frame locality: call of '" + fun + "' changed l" + std::to_string(l));
        }
    }

    Semantics sem_;
    const EvalOptions& opt_;
    Store store_;
    Location next_location_ = 1;
    EvalStats stats_;
    std::size_t depth_ = 0;
    std::vector<std::pair<Location, Value>> write_log_;
    std::unordered_set<const Closure*> compact_ok_;
};

}  // namespace

EvalOutcome evaluate(const Term& t, Semantics sem, const EvalOptions& options) {
    return Evaluator(sem, options).run(t);
}

}  // namespace contpass
