#pragma once

// Flat programs: a list of top-level functions and a main term.
//
// File syntax:
//   def f(x, y) = { term }
//   ...
//   main { term }

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contpass/ast.hpp"
#include "contpass/source.hpp"

namespace contpass {

struct FunDef {
    std::string name;
    std::vector<std::string> params;
    TermPtr body;
    SourceSpan span{};
};

struct Program {
    std::vector<FunDef> functions;
    TermPtr main;

    const FunDef* find(std::string_view name) const;
};

bool operator==(const FunDef& a, const FunDef& b);
bool operator==(const Program& a, const Program& b);

std::string print_program(const Program& p);

struct ProgramParseResult {
    std::optional<Program> program;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return program.has_value(); }
};

ProgramParseResult parse_program(std::string_view src);

/// True when src starts (after blanks and comments) with `def` or `main`.
bool looks_like_program(std::string_view src);

/// Duplicate names (UNIQ_FUNCTION), bodies using variables other than their
/// own params or calling unknown functions (SCOPE_*), arity (SCOPE_ARITY).
std::vector<Diagnostic> validate_program(const Program& p);

/// Nests the functions as letrecs around main, callees outside their
/// callers and program order otherwise. Throws NOT_CLOSED on mutual
/// recursion, which has no nested form.
TermPtr unfloat(const Program& p);

}  // namespace contpass
