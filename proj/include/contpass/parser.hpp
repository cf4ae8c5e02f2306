#pragma once

// Concrete syntax:
//
//   term    := stmt (";" term)?
//   stmt    := "letrec" ident "(" params ")" "=" "{" term "}" "in" term
//            | ident ":=" stmt
//            | "if" term "then" "{" term "}" "else" "{" term "}"
//            | expr
//   expr    := sum (("<" | "==") sum)?
//   sum     := primary (("+" | "-") primary)*
//   primary := int | "-" int | "true" | "false" | "unit"
//            | ident | ident "(" (term ("," term)*)? ")" | "(" term ")"
//
// Operands of "+", "-", "<" and "==" must be expressions (no calls,
// assignments, ...). Line comments start with "//".
//
// Diagnostic codes:
//   PARSE_UNEXPECTED_TOKEN  PARSE_UNTERMINATED  PARSE_UNEXPECTED_CHAR
//   PARSE_INT_OVERFLOW      PARSE_NON_EXPR_OPERAND  PARSE_DUPLICATE_PARAM
//   SCOPE_UNBOUND_VAR       SCOPE_UNBOUND_FUN   SCOPE_ARITY  UNIQ_PARAM

#include <string_view>
#include <vector>

#include "contpass/ast.hpp"
#include "contpass/source.hpp"

namespace contpass {

struct ParseResult {
    TermPtr term;                          // null on failure
    std::vector<Diagnostic> diagnostics;   // one entry on failure

    bool ok() const { return term != nullptr; }
};

ParseResult parse_term(std::string_view src);

struct ValidateOptions {
    /// Lambda-lifted terms reuse parameter names on purpose.
    bool allow_param_shadowing = false;
};

/// Empty iff t is closed (no free variables, no unbound function names)
/// with calls matching their function's arity and, unless relaxed, every
/// parameter name used once in the program.
std::vector<Diagnostic> validate(const Term& t, ValidateOptions options = {});

}  // namespace contpass
