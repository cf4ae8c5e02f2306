#include "contpass/machines.hpp"

#include <memory>

#include "contpass/bigstep.hpp"

namespace contpass {

Continuation convert_context(const Context& c) { return Continuation{c.frames}; }
Context invert_continuation(const Continuation& k) { return Context{k.frames}; }

Value eval_expr(const Expr& e, const FrameStore& sigma) {
    if (auto* l = as<Expr::Lit>(e)) return l->value;
    if (auto* v = as<Expr::Var>(e)) {
        auto it = sigma.find(v->name);
        if (it == sigma.end()) throw Error(ErrorCode::unbound_var, "unbound variable '" + v->name + "'");
        return it->second;
    }
    auto& b = std::get<Expr::BinOp>(e.node);
    Value l = eval_expr(*b.left, sigma);
    Value r = eval_expr(*b.right, sigma);
    return apply_binop(b.op, l, r);
}

namespace {

bool truth(const Value& v) {
    if (!v.is_bool()) throw Error(ErrorCode::type_error, "condition is " + v.to_string());
    return v.as_bool();
}

ExprPtr normalize(const ExprPtr& e, const FrameStore& sigma) {
    return mk::lit(eval_expr(*e, sigma));
}

std::vector<Value> values_of(const std::string& fun, const std::vector<ExprPtr>& args) {
    std::vector<Value> out;
    for (auto& a : args) {
        auto* l = as<Expr::Lit>(*a);
        if (!l) throw Error(ErrorCode::stuck, "argument of '" + fun + "' is not a value");
        out.push_back(l->value);
    }
    return out;
}

template <class Body>
const FlatFun<Body>& callee(const FlatProgram<Body>& p, const Frame& f) {
    auto* fn = p.find(f.fun);
    if (!fn) throw Error(ErrorCode::stuck, "no function '" + f.fun + "'");
    if (fn->params.size() != f.args.size())
        throw Error(ErrorCode::arity_mismatch, "'" + f.fun + "' expects " +
                                                   std::to_string(fn->params.size()) +
                                                   " arguments, got " +
                                                   std::to_string(f.args.size()));
    return *fn;
}

FrameStore bind_params(const std::vector<std::string>& params, const std::vector<Value>& args) {
    FrameStore s;
    for (std::size_t i = 0; i < params.size(); ++i) s[params[i]] = args[i];
    return s;
}

// Rules 1 to 6 are shared by both machines; rule 7 and the tail rules are
// supplied by the caller.
template <class State, class EnterTail>
int head_step(State& s, typename State::HeadState& h, EnterTail&& enter_tail) {
    using H = std::decay_t<decltype(*h.term)>;
    auto term = h.term;
    if (auto* a = std::get_if<typename H::AssignThen>(&term->node)) {
        h.store[a->var] = eval_expr(*a->rhs, h.store);
        h.term = a->rest;
        return 1;
    }
    if (auto* c = std::get_if<typename H::Cond>(&term->node)) {
        if (truth(eval_expr(*c->cond, h.store))) {
            h.term = c->then_branch;
            return 2;
        }
        h.term = c->else_branch;
        return 3;
    }
    if (auto* l = std::get_if<typename H::Leaf>(&term->node)) {
        Value v = eval_expr(*l->expr, h.store);
        auto& frames = h.stack.frames;
        if (frames.empty()) {
            s.node = typename State::Done{v};
            return 6;
        }
        int rule = 4;
        if (frames.back().hole) {
            frames.back().args.push_back(v);
            frames.back().hole = false;
            rule = 5;
        }
        s.node = typename State::TailState{{}, std::move(h.stack)};
        return rule;
    }
    auto& q = std::get<typename H::TailOf>(term->node).tail;
    s.node = typename State::TailState{enter_tail(q, h.store), std::move(h.stack)};
    return 7;
}

template <class State, class Body>
int enter(State& s, typename State::TailState& t, const FlatProgram<Body>& p) {
    auto& frames = t.stack.frames;
    if (frames.empty()) throw Error(ErrorCode::stuck, "empty tail with no pending frame");
    if (frames.back().hole)
        throw Error(ErrorCode::stuck, "pending frame '" + frames.back().fun + "' awaits a value");
    Frame f = std::move(frames.back());
    frames.pop_back();
    auto& fn = callee(p, f);
    s.node = typename State::HeadState{fn.body, std::move(t.stack), bind_params(fn.params, f.args)};
    return 10;
}

NestedCall substitute(const NestedCall& f, const FrameStore& sigma) {
    NestedCall out{f.fun, {}, nullptr};
    for (auto& a : f.args) out.args.push_back(normalize(a, sigma));
    if (f.nested) out.nested = std::make_shared<const NestedCall>(substitute(*f.nested, sigma));
    return out;
}

template <class State, class Program, class Advance>
MachineResult run(State s, const Program& p, const MachineOptions& opts, Advance&& adv) {
    MachineResult r;
    while (!s.done()) {
        if (r.steps >= opts.fuel)
            throw Error(ErrorCode::fuel_exhausted, "no result within " + std::to_string(opts.fuel) + " steps",
                        r.steps);
        int rule;
        try {
            rule = adv(s, p);
        } catch (const Error& e) {
            throw Error(e.code(), e.detail(), r.steps + 1);
        }
        ++r.steps;
        if (opts.trace) opts.trace(MachineEvent{r.steps, rule, to_json(s)});
    }
    r.value = std::get<typename State::Done>(s.node).value;
    return r;
}

}  // namespace

ConvState initial_state(const ConvProgram& p) {
    return ConvState{ConvState::HeadState{p.main, {}, {}}};
}

CpsState initial_state(const CpsProgram& p) {
    return CpsState{CpsState::HeadState{p.main, {}, {}}};
}

int advance(ConvState& s, const ConvProgram& p) {
    if (auto* h = std::get_if<ConvState::HeadState>(&s.node)) {
        return head_step(s, *h, [](const ConvTail& q, const FrameStore& sigma) {
            ConvTail out;
            for (auto& f : q.calls) out.calls.push_back(substitute(f, sigma));
            return out;
        });
    }
    if (auto* t = std::get_if<ConvState::TailState>(&s.node)) {
        auto& calls = t->tail.calls;
        if (calls.empty()) return enter(s, *t, p);
        NestedCall last = std::move(calls.back());
        calls.pop_back();
        Frame f{last.fun, values_of(last.fun, last.args), last.nested != nullptr};
        t->stack.frames.push_back(std::move(f));
        if (last.nested) {
            calls.push_back(*last.nested);
            return 9;
        }
        return 8;
    }
    throw Error(ErrorCode::stuck, "machine already finished");
}

int advance(CpsState& s, const CpsProgram& p) {
    if (auto* h = std::get_if<CpsState::HeadState>(&s.node)) {
        return head_step(s, *h, [](const CpsTail& q, const FrameStore& sigma) {
            CpsTail out;
            for (auto& push : q.pushes) {
                Push np{push.fun, {}, push.hole};
                for (auto& a : push.args) np.args.push_back(normalize(a, sigma));
                out.pushes.push_back(std::move(np));
            }
            return out;
        });
    }
    if (auto* t = std::get_if<CpsState::TailState>(&s.node)) {
        auto& pushes = t->tail.pushes;
        if (pushes.empty()) return enter(s, *t, p);
        Push first = std::move(pushes.front());
        pushes.erase(pushes.begin());
        t->stack.frames.push_back(Frame{first.fun, values_of(first.fun, first.args), first.hole});
        return first.hole ? 9 : 8;
    }
    throw Error(ErrorCode::stuck, "machine already finished");
}

StepResult<ConvState> step_convertible(const ConvState& s, const ConvProgram& p) {
    ConvState next = s;
    int rule = advance(next, p);
    return {std::move(next), rule};
}

StepResult<CpsState> step_cps(const CpsState& s, const CpsProgram& p) {
    CpsState next = s;
    int rule = advance(next, p);
    return {std::move(next), rule};
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Value& v) {
    if (v.is_int()) return v.as_int();
    if (v.is_bool()) return v.as_bool();
    return "unit";
}

nlohmann::json to_json(const Frame& f) {
    nlohmann::json args = nlohmann::json::array();
    for (auto& a : f.args) args.push_back(to_json(a));
    return {{"fun", f.fun}, {"args", args}, {"hole", f.hole}};
}

namespace {

template <class State>
nlohmann::json state_json(const State& s) {
    auto frames = [](const auto& stack) {
        nlohmann::json out = nlohmann::json::array();
        for (auto it = stack.frames.rbegin(); it != stack.frames.rend(); ++it) out.push_back(to_json(*it));
        return out;
    };
    if (auto* h = std::get_if<typename State::HeadState>(&s.node)) {
        nlohmann::json store = nlohmann::json::object();
        for (auto& [x, v] : h->store) store[x] = to_json(v);
        return {{"kind", "head"}, {"term", print(*h->term)}, {"frames", frames(h->stack)},
                {"store", store}};
    }
    if (auto* t = std::get_if<typename State::TailState>(&s.node))
        return {{"kind", "tail"}, {"term", print(t->tail)}, {"frames", frames(t->stack)}};
    return {{"kind", "done"}, {"value", to_json(std::get<typename State::Done>(s.node).value)}};
}

}  // namespace

nlohmann::json to_json(const ConvState& s) { return state_json(s); }
nlohmann::json to_json(const CpsState& s) { return state_json(s); }

// ---------------------------------------------------------------------------
// runs

MachineResult run_machine(const ConvProgram& p, const ConvTermPtr& start, const FrameStore& sigma,
                          const MachineOptions& opts) {
    return run(ConvState{ConvState::HeadState{start, {}, sigma}}, p, opts,
               [](ConvState& s, const ConvProgram& q) { return advance(s, q); });
}

MachineResult run_machine(const ConvProgram& p, const MachineOptions& opts) {
    return run_machine(p, p.main, {}, opts);
}

MachineResult run_machine(const CpsProgram& p, const MachineOptions& opts) {
    return run(initial_state(p), p, opts, [](CpsState& s, const CpsProgram& q) { return advance(s, q); });
}

namespace {

using SharedStore = std::shared_ptr<const FrameStore>;

struct LazyFrame {
    std::string fun;
    std::vector<ExprPtr> args;
    SharedStore env;
    std::optional<Value> filled;
    bool hole = false;
};

struct LazyStack {
    std::vector<LazyFrame> frames;
};

struct LazyTail {
    ConvTail tail;
    SharedStore env;
};

struct LazyState {
    struct HeadState {
        ConvTermPtr term;
        LazyStack stack;
        FrameStore store;
    };
    struct TailState {
        LazyTail tail;
        LazyStack stack;
    };
    struct Done {
        Value value;
    };
    std::variant<HeadState, TailState, Done> node;

    bool done() const { return std::holds_alternative<Done>(node); }
};

int lazy_advance(LazyState& s, const ConvProgram& p) {
    if (auto* h = std::get_if<LazyState::HeadState>(&s.node)) {
        auto term = h->term;
        if (auto* l = std::get_if<ConvTerm::Leaf>(&term->node)) {
            Value v = eval_expr(*l->expr, h->store);
            auto& frames = h->stack.frames;
            if (frames.empty()) {
                s.node = LazyState::Done{v};
                return 6;
            }
            int rule = 4;
            if (frames.back().hole) {
                frames.back().filled = v;
                frames.back().hole = false;
                rule = 5;
            }
            s.node = LazyState::TailState{LazyTail{{}, nullptr}, std::move(h->stack)};
            return rule;
        }
        if (auto* q = std::get_if<ConvTerm::TailOf>(&term->node)) {
            auto env = std::make_shared<const FrameStore>(std::move(h->store));
            s.node = LazyState::TailState{LazyTail{q->tail, env}, std::move(h->stack)};
            return 7;
        }
        // rules 1 to 3 do not involve frames
        ConvState tmp{ConvState::HeadState{term, {}, std::move(h->store)}};
        auto& th = std::get<ConvState::HeadState>(tmp.node);
        int rule = head_step(tmp, th, [](const ConvTail&, const FrameStore&) { return ConvTail{}; });
        h->term = th.term;
        h->store = std::move(th.store);
        return rule;
    }
    auto& t = std::get<LazyState::TailState>(s.node);
    auto& calls = t.tail.tail.calls;
    auto& frames = t.stack.frames;
    if (calls.empty()) {
        if (frames.empty()) throw Error(ErrorCode::stuck, "empty tail with no pending frame");
        if (frames.back().hole)
            throw Error(ErrorCode::stuck, "pending frame '" + frames.back().fun + "' awaits a value");
        LazyFrame lf = std::move(frames.back());
        frames.pop_back();
        Frame f{lf.fun, {}, false};
        for (auto& a : lf.args) f.args.push_back(eval_expr(*a, *lf.env));
        if (lf.filled) f.args.push_back(*lf.filled);
        auto& fn = callee(p, f);
        s.node = LazyState::HeadState{fn.body, std::move(t.stack), bind_params(fn.params, f.args)};
        return 10;
    }
    NestedCall last = std::move(calls.back());
    calls.pop_back();
    frames.push_back(LazyFrame{last.fun, last.args, t.tail.env, std::nullopt, last.nested != nullptr});
    if (last.nested) {
        calls.push_back(*last.nested);
        return 9;
    }
    return 8;
}

}  // namespace

MachineResult run_lazy_machine(const ConvProgram& p, const MachineOptions& opts) {
    return run_lazy_machine(p, p.main, {}, opts);
}

MachineResult run_lazy_machine(const ConvProgram& p, const ConvTermPtr& start, const FrameStore& sigma,
                               const MachineOptions& opts) {
    MachineResult r;
    LazyState s{LazyState::HeadState{start, {}, sigma}};
    while (!s.done()) {
        if (r.steps >= opts.fuel)
            throw Error(ErrorCode::fuel_exhausted, "no result within " + std::to_string(opts.fuel) + " steps",
                        r.steps);
        int rule;
        try {
            rule = lazy_advance(s, p);
        } catch (const Error& e) {
            throw Error(e.code(), e.detail(), r.steps + 1);
        }
        ++r.steps;
        if (opts.trace) opts.trace(MachineEvent{r.steps, rule, nlohmann::json::object()});
    }
    r.value = std::get<LazyState::Done>(s.node).value;
    return r;
}

// ---------------------------------------------------------------------------
// bisimulation

namespace {

std::string related(const ConvState& a, const CpsState& b) {
    if (a.node.index() != b.node.index()) return "states have different kinds";
    if (auto* h = std::get_if<ConvState::HeadState>(&a.node)) {
        auto& g = std::get<CpsState::HeadState>(b.node);
        if (!(*cps_convert(*h->term) == *g.term)) return "head term is not the image of the convertible term";
        if (!(convert_context(h->stack) == g.stack)) return "continuation is not the image of the context";
        if (h->store != g.store) return "frame stores differ";
        return {};
    }
    if (auto* t = std::get_if<ConvState::TailState>(&a.node)) {
        auto& u = std::get<CpsState::TailState>(b.node);
        if (!(cps_convert(t->tail) == u.tail)) return "tail is not the image of the convertible tail";
        if (!(convert_context(t->stack) == u.stack)) return "continuation is not the image of the context";
        return {};
    }
    if (!(std::get<ConvState::Done>(a.node).value == std::get<CpsState::Done>(b.node).value))
        return "final values differ";
    return {};
}

}  // namespace

BisimReport bisim_check(const ConvProgram& p, std::uint64_t fuel) {
    BisimReport r;
    CpsProgram c = cps_convert(p);
    ConvState a = initial_state(p);
    CpsState b = initial_state(c);
    auto diverge = [&](std::string why) {
        r.lockstep = false;
        r.divergence_step = r.steps;
        r.reason = std::move(why);
        return r;
    };
    if (auto why = related(a, b); !why.empty()) return diverge(why);
    while (!a.done()) {
        if (r.steps >= fuel) {
            r.lockstep = true;
            r.error = ErrorCode::fuel_exhausted;
            return r;
        }
        std::optional<Error> ea, eb;
        int ra = 0, rb = 0;
        try {
            ra = advance(a, p);
        } catch (const Error& e) {
            ea = e;
        }
        try {
            rb = advance(b, c);
        } catch (const Error& e) {
            eb = e;
        }
        ++r.steps;
        if (ea || eb) {
            if (ea && eb && ea->code() == eb->code()) {
                r.lockstep = true;
                r.error = ea->code();
                return r;
            }
            return diverge(std::string("only one machine failed: ") + (ea ? ea->what() : eb->what()));
        }
        if (ra != rb)
            return diverge("rule " + std::to_string(ra) + " fired against rule " + std::to_string(rb));
        if (auto why = related(a, b); !why.empty()) return diverge(why);
    }
    r.lockstep = true;
    r.value = std::get<ConvState::Done>(a.node).value;
    return r;
}

}  // namespace contpass
