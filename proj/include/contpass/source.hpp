#pragma once

#include <cstddef>
#include <string>

namespace contpass {

/// Byte range in a source text plus the 1-based line/column of its start.
struct SourceSpan {
    std::size_t start_offset = 0;
    std::size_t end_offset = 0;
    int line = 0;
    int column = 0;

    bool known() const { return line > 0; }
    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Severity { error, warning };

/// A located message. Codes come from a closed set, grouped by prefix:
///   PARSE_*  lexical or grammatical failures (parser.hpp)
///   SCOPE_*  unbound names (validate)
///   UNIQ_*   duplicate parameters (validate)
///   CONV_*   shapes outside the CPS-convertible grammar (cps.hpp)
struct Diagnostic {
    SourceSpan span;
    Severity severity = Severity::error;
    std::string code;
    std::string message;
};

/// "line:col: code: message", the CLI rendering.
std::string render(const Diagnostic& d);

}  // namespace contpass
