#pragma once

// Lambda-lifting: positions, liftability, parameter lifting, whole-term
// lifting, block floating and the lifted form of function environments.

#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "contpass/ast.hpp"
#include "contpass/bigstep.hpp"
#include "contpass/error.hpp"
#include "contpass/program.hpp"

namespace contpass {

/// Child indices from the root. Assign: 0 rhs. If: 0 cond, 1 then, 2 else.
/// Seq: 0 first, 1 second. LetRec: 0 body, 1 cont. Call: i-th argument.
using Position = std::vector<int>;
using PositionSet = std::set<Position>;

PositionSet tail_positions(const Term& t);
PositionSet local_positions(const Term& t);

/// Subterm at a position, or null.
const Term* subterm(const Term& t, const Position& p);

struct LiftTarget {
    std::string param;
    std::string owner;
    std::set<std::string> inner_funs;
};

/// Finds the first letrec defining owner with the given param and collects
/// every function defined at any depth inside its body.
/// Throws TARGET_NOT_FOUND.
LiftTarget make_target(const Term& t, const std::string& param, const std::string& owner);

struct Violation {
    SourceSpan span;
    std::string call;    // printed call site
    std::string reason;
};

struct LiftReport {
    LiftTarget target;
    bool liftable = true;
    std::vector<Violation> violations;
};

LiftReport check_liftable(const Term& t, const LiftTarget& target);

class NotLiftable : public Error {
public:
    explicit NotLiftable(LiftReport r);
    const LiftReport& report() const { return report_; }

private:
    LiftReport report_;
};

/// The body transformation alone: letrecs of inner functions gain the
/// trailing param, calls to them gain the trailing argument.
TermPtr lift_term(const TermPtr& t, const LiftTarget& target);

/// Applies lift_term inside the owner's body. Throws NotLiftable.
TermPtr lift_param(const TermPtr& t, const LiftTarget& target);

/// Every (param, owner) pair whose param is free in a function nested
/// inside its owner, ordered by owner depth, then param name.
std::vector<LiftTarget> lift_candidates(const Term& t);

/// Lifts until no function body has free variables beyond its params.
/// Throws NotLiftable or NO_FIXPOINT.
TermPtr lift_all(const TermPtr& t, std::size_t max_rounds = 10000);

/// Renames every parameter that repeats an earlier name to a fresh one.
TermPtr alpha_rename(const TermPtr& t);

/// Hoists every letrec to the top level (pre-order). Throws NOT_CLOSED or
/// DUPLICATE_FUNCTION.
Program float_blocks(const TermPtr& t);

/// Lifted form of an environment, memoized by closure identity.
class EnvLifter {
public:
    explicit EnvLifter(LiftTarget target) : target_(std::move(target)) {}

    FunEnv lift(const FunEnv& funs);

    /// Number of closures reachable from lift(funs) that capture the
    /// lifted parameter.
    std::size_t param_occurrences(const FunEnv& funs);

    const LiftTarget& target() const { return target_; }

private:
    LiftTarget target_;
    // the original is kept alive so its address cannot be reused
    std::unordered_map<const Closure*, std::pair<ClosurePtr, ClosurePtr>> lifted_;
    std::unordered_map<const Closure*, std::size_t> occurrences_;
};

inline FunEnv lift_env(const FunEnv& funs, const LiftTarget& target) {
    return EnvLifter(target).lift(funs);
}

}  // namespace contpass
