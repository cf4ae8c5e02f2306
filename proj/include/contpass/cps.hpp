#pragma once

// CPS-convertible terms (heads over expressions, tails of nested calls),
// CPS terms (push/invoke), and the conversions between them.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "contpass/ast.hpp"
#include "contpass/error.hpp"
#include "contpass/program.hpp"
#include "contpass/source.hpp"

namespace contpass {

/// f(e1, ..., en) or f(e1, ..., en, F): the nested call takes the last slot.
struct NestedCall {
    std::string fun;
    std::vector<ExprPtr> args;
    std::shared_ptr<const NestedCall> nested;
};

bool operator==(const NestedCall& a, const NestedCall& b);

/// Q ::= ε | Q ; F. Calls are stored in execution order.
struct ConvTail {
    std::vector<NestedCall> calls;
};

/// One push of a CPS tail; hole marks the trailing ⊡ argument.
struct Push {
    std::string fun;
    std::vector<ExprPtr> args;
    bool hole = false;
};

/// push p0; push p1; ...; invoke. Pushes are stored in textual order.
struct CpsTail {
    std::vector<Push> pushes;
};

bool operator==(const ConvTail& a, const ConvTail& b);
bool operator==(const Push& a, const Push& b);
bool operator==(const CpsTail& a, const CpsTail& b);

/// Heads shared by both languages. For CPS terms the leaf reads
/// `invoke e`; for convertible terms it is the bare expression.
template <class Tail>
struct Head {
    using Ptr = std::shared_ptr<const Head>;
    struct Leaf {
        ExprPtr expr;
    };
    struct AssignThen {
        std::string var;
        ExprPtr rhs;
        Ptr rest;
    };
    struct Cond {
        ExprPtr cond;
        Ptr then_branch;
        Ptr else_branch;
    };
    struct TailOf {
        Tail tail;
    };
    using Node = std::variant<Leaf, AssignThen, Cond, TailOf>;

    Node node;

    static Ptr leaf(ExprPtr e) { return std::make_shared<const Head>(Head{Leaf{std::move(e)}}); }
    static Ptr assign(std::string x, ExprPtr e, Ptr rest) {
        return std::make_shared<const Head>(Head{AssignThen{std::move(x), std::move(e), std::move(rest)}});
    }
    static Ptr cond(ExprPtr c, Ptr a, Ptr b) {
        return std::make_shared<const Head>(Head{Cond{std::move(c), std::move(a), std::move(b)}});
    }
    static Ptr tail(Tail q) { return std::make_shared<const Head>(Head{TailOf{std::move(q)}}); }
};

using ConvTerm = Head<ConvTail>;
using CpsTerm = Head<CpsTail>;
using ConvTermPtr = ConvTerm::Ptr;
using CpsTermPtr = CpsTerm::Ptr;

bool operator==(const ConvTerm& a, const ConvTerm& b);
bool operator==(const CpsTerm& a, const CpsTerm& b);

template <class Body>
struct FlatFun {
    std::string name;
    std::vector<std::string> params;
    Body body;
};

template <class Body>
struct FlatProgram {
    std::vector<FlatFun<Body>> functions;
    Body main;

    const FlatFun<Body>* find(std::string_view name) const {
        for (auto& f : functions)
            if (f.name == name) return &f;
        return nullptr;
    }
};

using ConvProgram = FlatProgram<ConvTermPtr>;
using CpsProgram = FlatProgram<CpsTermPtr>;

bool operator==(const ConvProgram& a, const ConvProgram& b);
bool operator==(const CpsProgram& a, const CpsProgram& b);

// ---------------------------------------------------------------------------
// recognition and un-floating

struct ConvResult {
    std::optional<ConvProgram> program;
    std::vector<Diagnostic> diagnostics;  // CONV_* plus program validation

    bool ok() const { return program.has_value(); }
};

/// Diagnostic codes: CONV_CALL_IN_EXPR, CONV_NESTED_NOT_LAST,
/// CONV_NON_EXPR_CONDITION, CONV_LETREC, CONV_UNSUPPORTED.
ConvResult to_convertible(const Program& p);

/// Recognizes a single head term; diagnostics are appended to out.
ConvTermPtr to_convertible(const Term& t, std::vector<Diagnostic>& out);

/// Term with the same shape: tails become right-nested sequences.
/// Throws NOT_WELL_FORMED on an empty tail, which has no term form.
TermPtr to_term(const ConvTerm& t);
TermPtr to_term(const NestedCall& f);

Program to_program(const ConvProgram& p);

/// unfloat(to_program(p)).
TermPtr unfloat(const ConvProgram& p);

// ---------------------------------------------------------------------------
// conversions

CpsTermPtr cps_convert(const ConvTerm& t);
CpsTail cps_convert(const ConvTail& q);
CpsProgram cps_convert(const ConvProgram& p);

bool is_well_formed(const CpsTail& q);
bool is_well_formed(const CpsTerm& t);
bool is_well_formed(const CpsProgram& p);

/// Throws NOT_WELL_FORMED.
ConvTermPtr cps_invert(const CpsTerm& t);
ConvTail cps_invert(const CpsTail& q);
ConvProgram cps_invert(const CpsProgram& p);

// ---------------------------------------------------------------------------
// concrete syntax

std::string print(const ConvTail& q);
std::string print(const NestedCall& f);
std::string print(const ConvTerm& t);
std::string print(const CpsTail& q);
std::string print(const CpsTerm& t);
std::string print_program(const ConvProgram& p);
std::string print_program(const CpsProgram& p);

struct CpsParseResult {
    std::optional<CpsProgram> program;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return program.has_value(); }
};

/// Program syntax with CPS bodies:
///   head ::= "invoke" expr | x ":=" expr ";" head
///          | "if" expr "then" "{" head "}" "else" "{" head "}" | tail
///   tail ::= "invoke" | "push" f "(" args ")" ";" tail
/// where args may end with the hole "_". A bare "invoke" is one followed
/// by "}" or the end of input.
CpsParseResult parse_cps_program(std::string_view src);

}  // namespace contpass
