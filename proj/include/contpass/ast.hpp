#pragma once

// Abstract syntax of the mini imperative language: values, pure
// expressions and terms (assignment, conditional, sequence, letrec, call).
// Nodes are immutable and shared through shared_ptr<const T>.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "contpass/source.hpp"

namespace contpass {

struct Unit {
    friend bool operator==(Unit, Unit) { return true; }
};

class Value {
public:
    using Repr = std::variant<Unit, bool, std::int64_t>;

    Value() = default;
    static Value unit() { return Value(Repr{Unit{}}); }
    static Value boolean(bool b) { return Value(Repr{b}); }
    static Value integer(std::int64_t n) { return Value(Repr{n}); }

    bool is_unit() const { return std::holds_alternative<Unit>(repr_); }
    bool is_bool() const { return std::holds_alternative<bool>(repr_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(repr_); }
    bool as_bool() const { return std::get<bool>(repr_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(repr_); }
    const Repr& repr() const { return repr_; }

    /// "unit", "true", "false" or a decimal integer.
    std::string to_string() const;

    friend bool operator==(const Value&, const Value&) = default;

private:
    explicit Value(Repr r) : repr_(std::move(r)) {}
    Repr repr_{Unit{}};
};

enum class BinOpKind { add, sub, lt, eq };

const char* spelling(BinOpKind op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    struct Lit {
        Value value;
    };
    struct Var {
        std::string name;
    };
    struct BinOp {
        BinOpKind op;
        ExprPtr left;
        ExprPtr right;
    };
    using Node = std::variant<Lit, Var, BinOp>;

    Node node;
};

bool operator==(const Expr& a, const Expr& b);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    struct E {
        ExprPtr expr;
    };
    struct Assign {
        std::string var;
        TermPtr rhs;
    };
    struct If {
        TermPtr cond;
        TermPtr then_branch;
        TermPtr else_branch;
    };
    struct Seq {
        TermPtr first;
        TermPtr second;
    };
    struct LetRec {
        std::string fun;
        std::vector<std::string> params;
        TermPtr body;
        TermPtr cont;
    };
    struct Call {
        std::string fun;
        std::vector<TermPtr> args;
    };
    using Node = std::variant<E, Assign, If, Seq, LetRec, Call>;

    Node node;
    SourceSpan span{};  // unknown for synthesized terms; ignored by ==
};

/// Structural equality; spans are not compared.
bool operator==(const Term& a, const Term& b);
bool same(const TermPtr& a, const TermPtr& b);

template <class Alt>
const Alt* as(const Term& t) {
    return std::get_if<Alt>(&t.node);
}
template <class Alt>
const Alt* as(const Expr& e) {
    return std::get_if<Alt>(&e.node);
}

/// Node builders. Spans default to unknown.
namespace mk {

ExprPtr lit(Value v);
ExprPtr int_(std::int64_t n);
ExprPtr bool_(bool b);
ExprPtr unit();
ExprPtr var(std::string name);
ExprPtr binop(BinOpKind op, ExprPtr l, ExprPtr r);

TermPtr e(ExprPtr expr, SourceSpan span = {});
TermPtr assign(std::string var, TermPtr rhs, SourceSpan span = {});
TermPtr ite(TermPtr cond, TermPtr then_branch, TermPtr else_branch, SourceSpan span = {});
TermPtr seq(TermPtr first, TermPtr second, SourceSpan span = {});
TermPtr letrec(std::string fun, std::vector<std::string> params, TermPtr body, TermPtr cont,
               SourceSpan span = {});
TermPtr call(std::string fun, std::vector<TermPtr> args, SourceSpan span = {});

// Shorthands for tests and generators.
inline TermPtr int_term(std::int64_t n) { return e(int_(n)); }
inline TermPtr var_term(std::string x) { return e(var(std::move(x))); }

}  // namespace mk

std::string pretty_print(const Expr& e);
std::string pretty_print(const Term& t);
inline std::string pretty_print(const TermPtr& t) { return pretty_print(*t); }

using IdentSet = std::set<std::string>;

/// Variables occurring free in t (function names are not variables;
/// assignment targets are occurrences).
IdentSet free_vars(const Term& t);
IdentSet free_vars(const Expr& e);

/// Replaces free variable reads by literals. Assignment targets have no
/// literal form and are left in place, so the free-variable law
/// fv(subst(t, m)) = fv(t) \ dom(m) holds for variables that are only read.
TermPtr subst_values(const TermPtr& t, const std::map<std::string, Value>& binding);
ExprPtr subst_values(const ExprPtr& e, const std::map<std::string, Value>& binding);

/// Number of Term and Expr nodes; used as the shrink measure.
std::size_t node_count(const Term& t);

}  // namespace contpass
