#pragma once

// Lexer and recursive-descent core shared by the term, program and CPS
// program parsers. Internal to the library.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contpass/ast.hpp"
#include "contpass/source.hpp"

namespace contpass::syntax {

enum class Tok {
    ident,
    integer,
    lparen,
    rparen,
    lbrace,
    rbrace,
    comma,
    semi,
    assign,  // :=
    equals,  // =
    eqeq,    // ==
    plus,
    minus,
    less,
    eof,
};

struct Token {
    Tok kind;
    std::string text;
    SourceSpan span;
};

/// Thrown on the first error; parsers catch it at their entry point.
struct ParseFailure : std::runtime_error {
    explicit ParseFailure(Diagnostic d) : std::runtime_error(d.message), diag(std::move(d)) {}
    Diagnostic diag;
};

std::vector<Token> lex(std::string_view src);

bool is_keyword(std::string_view word);

class Parser {
public:
    explicit Parser(std::string_view src);

    TermPtr term();
    TermPtr stmt();
    ExprPtr expression();  // an expr-only position (CPS programs)

    // Token helpers, exposed for the program parsers.
    const Token& peek(std::size_t ahead = 0) const;
    bool at(Tok k) const { return peek().kind == k; }
    bool at_word(std::string_view w) const {
        return peek().kind == Tok::ident && peek().text == w;
    }
    const Token& advance();
    const Token& expect(Tok k, const char* what);
    void expect_word(std::string_view w);
    std::string ident(const char* what);
    std::vector<std::string> params();
    void expect_eof();
    [[noreturn]] void fail(const Token& at, std::string code, std::string message) const;
    SourceSpan span_from(const SourceSpan& start) const;

private:
    TermPtr comparison();
    TermPtr sum();
    TermPtr primary();
    ExprPtr operand(const TermPtr& t, const Token& at) const;

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::size_t last_end_ = 0;
};

}  // namespace contpass::syntax
