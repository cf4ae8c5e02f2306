#pragma once

// Big-step evaluators over stores, split variable environments and
// closures: naive, intermediate (minimal stores) and optimised (minimal
// stores and compact closures).

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "contpass/ast.hpp"
#include "contpass/error.hpp"

namespace contpass {

using Location = std::uint64_t;
using Store = std::map<Location, Value>;
using LocationSet = std::set<Location>;

/// Ordered list of bindings; later entries shadow earlier ones.
class VarEnv {
public:
    using Entry = std::pair<std::string, Location>;

    VarEnv() = default;
    VarEnv(std::initializer_list<Entry> entries) : entries_(entries) {}
    explicit VarEnv(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    std::optional<Location> lookup(std::string_view x) const;
    bool contains(std::string_view x) const { return lookup(x).has_value(); }
    void bind(std::string x, Location l) { entries_.emplace_back(std::move(x), l); }

    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    LocationSet image() const;
    /// Drops every binding (shadowed or not) of the given names.
    VarEnv without(const std::vector<std::string>& names) const;

    friend bool operator==(const VarEnv&, const VarEnv&) = default;

private:
    std::vector<Entry> entries_;
};

/// front·back: bindings of front shadow those of back.
VarEnv concat(const VarEnv& front, const VarEnv& back);

/// ⟨tail | rest⟩; lookups go through tail·rest.
struct SplitEnv {
    VarEnv tail;
    VarEnv rest;

    VarEnv flat() const { return concat(tail, rest); }
    std::optional<Location> lookup(std::string_view x) const;
    std::size_t depth() const { return tail.size() + rest.size(); }
};

struct Closure;
using ClosurePtr = std::shared_ptr<const Closure>;
using FunEnv = std::map<std::string, ClosurePtr>;

struct Closure {
    std::vector<std::string> params;
    TermPtr body;
    VarEnv captured_vars;
    FunEnv captured_funs;
};

/// s restricted to dom(s) \ Im(env).
Store gc_clean(const VarEnv& env, const Store& s);

/// Locations appearing in any variable environment reachable from F.
LocationSet env_locations(const FunEnv& funs);

/// Every variable environment reachable from F (with repetitions removed
/// by closure identity).
std::vector<const VarEnv*> env_set(const FunEnv& funs);

/// Canonical compact environment: each closure forgets its own params.
FunEnv close_env(const FunEnv& funs);

/// No closure (transitively) captures one of its own parameters.
bool is_compact(const FunEnv& funs);

/// True iff no location is bound to two different names across envs.
bool check_aliasing_free(const std::vector<VarEnv>& envs);
bool check_aliasing_free(const std::vector<const VarEnv*>& envs);

/// s ⊑ t: t restricted to dom(s) equals s.
bool store_leq(const Store& s, const Store& t);

enum class Semantics { naive, intermediate, optimised };
const char* semantics_name(Semantics s);

struct Monitors {
    bool aliasing = false;        // Env(F) ∪ {ρ, ρT} aliasing-free at each call
    bool compact = false;         // every closure built is compact
    bool freshness = false;       // fresh locations avoid dom(s) and Loc(F)
    bool frame_locality = false;  // store before a call ⊑ store after (naive)
};

/// Deliberate rule corruptions, used to show the harness catches bugs.
enum class Fault {
    none,
    drop_gc_at_val,  // (val) leaves the store uncleaned
    swap_seq_env,    // (seq) runs its first part in tail environment
};

struct TraceEvent {
    std::uint64_t step;
    const char* rule;
    std::size_t store_size;
    std::size_t env_depth;
};

struct CallSite {
    const std::string& fun;
    const FunEnv& funs;  // F at the call site
    const SplitEnv& env;
    const Store& store;
    std::uint64_t step;
};

struct EvalOptions {
    std::uint64_t fuel = 100000;
    std::size_t max_depth = 3000;  // nesting budget; exceeding it counts as fuel
    Monitors monitors{};
    Fault fault = Fault::none;
    std::function<void(const TraceEvent&)> trace;
    std::function<void(const CallSite&)> on_call;
};

struct EvalStats {
    std::uint64_t steps = 0;
    std::size_t max_store = 0;
    std::uint64_t fresh_allocated = 0;
    std::uint64_t calls = 0;
};

struct EvalOutcome {
    Value value;
    Store final_store;
    EvalStats stats;
};

/// Throws Error (FUEL_EXHAUSTED, UNBOUND_VAR, UNBOUND_FUN,
/// DANGLING_LOCATION, TYPE_ERROR, ARITY_MISMATCH, MONITOR_VIOLATION).
EvalOutcome evaluate(const Term& t, Semantics sem, const EvalOptions& options = {});

inline EvalOutcome eval_naive(const Term& t, const EvalOptions& o = {}) {
    return evaluate(t, Semantics::naive, o);
}
inline EvalOutcome eval_intermediate(const Term& t, const EvalOptions& o = {}) {
    return evaluate(t, Semantics::intermediate, o);
}
inline EvalOutcome eval_optimised(const Term& t, const EvalOptions& o = {}) {
    return evaluate(t, Semantics::optimised, o);
}

/// Pure expression evaluation shared with the machines. Integers wrap.
Value apply_binop(BinOpKind op, const Value& l, const Value& r);

std::string to_string(const Store& s);

}  // namespace contpass
