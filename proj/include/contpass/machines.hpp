#pragma once

// Small-step machines: the context machine over convertible programs, the
// continuation machine over CPS programs, a lazy-lookup variant of the
// context machine, and the lock-step bisimulation check between the first
// two.
//
// Rule tags: 1 assign, 2 if-true, 3 if-false, 4 return to a full frame,
// 5 fill a hole, 6 final value, 7 tail entry (substitute and normalize
// arguments), 8 push a full frame, 9 push a hole frame, 10 enter a callee.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "contpass/ast.hpp"
#include "contpass/cps.hpp"
#include "contpass/error.hpp"

namespace contpass {

using FrameStore = std::map<std::string, Value>;

struct Frame {
    std::string fun;
    std::vector<Value> args;
    bool hole = false;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// Frames with the innermost at back().
struct Context {
    std::vector<Frame> frames;
    friend bool operator==(const Context&, const Context&) = default;
};

/// Frames with the head at back().
struct Continuation {
    std::vector<Frame> frames;
    friend bool operator==(const Continuation&, const Continuation&) = default;
};

/// △ and ▽: innermost frame of the context is the head of the continuation.
Continuation convert_context(const Context& c);
Context invert_continuation(const Continuation& k);

/// Pure expression evaluation against a frame store.
/// Throws UNBOUND_VAR, TYPE_ERROR.
Value eval_expr(const Expr& e, const FrameStore& sigma);

template <class TermPtrT, class TailT, class Stack>
struct MachineState {
    struct HeadState {
        TermPtrT term;
        Stack stack;
        FrameStore store;
    };
    struct TailState {
        TailT tail;
        Stack stack;
    };
    struct Done {
        Value value;
    };
    std::variant<HeadState, TailState, Done> node;

    bool done() const { return std::holds_alternative<Done>(node); }
};

using ConvState = MachineState<ConvTermPtr, ConvTail, Context>;
using CpsState = MachineState<CpsTermPtr, CpsTail, Continuation>;

ConvState initial_state(const ConvProgram& p);
CpsState initial_state(const CpsProgram& p);

/// Fires one rule in place and returns its tag. Throws STUCK,
/// ARITY_MISMATCH, UNBOUND_VAR, TYPE_ERROR.
int advance(ConvState& s, const ConvProgram& p);
int advance(CpsState& s, const CpsProgram& p);

template <class State>
struct StepResult {
    State state;
    int rule;
};

StepResult<ConvState> step_convertible(const ConvState& s, const ConvProgram& p);
StepResult<CpsState> step_cps(const CpsState& s, const CpsProgram& p);

nlohmann::json to_json(const Value& v);
nlohmann::json to_json(const Frame& f);
/// {"kind": "head"|"tail"|"done", "term", "frames" (innermost/head first),
/// "store", "value"}.
nlohmann::json to_json(const ConvState& s);
nlohmann::json to_json(const CpsState& s);

struct MachineEvent {
    std::uint64_t step;
    int rule;
    nlohmann::json state;  // state after the rule fired
};

struct MachineOptions {
    std::uint64_t fuel = 100000;
    std::function<void(const MachineEvent&)> trace;
};

struct MachineResult {
    Value value;
    std::uint64_t steps = 0;
};

enum class MachineKind { convertible, cps };

/// Throws FUEL_EXHAUSTED and whatever a step throws.
MachineResult run_machine(const ConvProgram& p, const MachineOptions& opts = {});
MachineResult run_machine(const CpsProgram& p, const MachineOptions& opts = {});

/// Context machine whose tail entry keeps the store instead of
/// substituting; frame arguments are evaluated only when the frame is
/// entered. Same rule tags and step counts as the context machine.
MachineResult run_lazy_machine(const ConvProgram& p, const MachineOptions& opts = {});

/// Runs from ⟨start, [ ], sigma⟩ instead of from main.
MachineResult run_machine(const ConvProgram& p, const ConvTermPtr& start, const FrameStore& sigma,
                          const MachineOptions& opts = {});
MachineResult run_lazy_machine(const ConvProgram& p, const ConvTermPtr& start,
                               const FrameStore& sigma, const MachineOptions& opts = {});

struct BisimReport {
    bool lockstep = false;
    std::optional<std::uint64_t> divergence_step;
    std::uint64_t steps = 0;
    std::optional<Value> value;         // common final value
    std::optional<ErrorCode> error;     // common failure, if both failed alike
    std::string reason;                 // set when lockstep is false
};

BisimReport bisim_check(const ConvProgram& p, std::uint64_t fuel = 100000);

}  // namespace contpass
