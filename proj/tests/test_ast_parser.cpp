#include <gtest/gtest.h>

#include "contpass/ast.hpp"
#include "contpass/parser.hpp"

using namespace contpass;

namespace {

TermPtr parse(const std::string& src) {
    auto r = parse_term(src);
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : render(r.diagnostics[0]));
    return r.term;
}

std::vector<std::string> codes(const std::vector<Diagnostic>& ds) {
    std::vector<std::string> out;
    for (auto& d : ds) out.push_back(d.code);
    return out;
}

const char* kExample = "letrec g(x) = { letrec h() = { x } in h() } in g(1)";

}  // namespace

TEST(PrettyPrint, Literal) { EXPECT_EQ(pretty_print(mk::int_term(1)), "1"); }

TEST(PrettyPrint, ExampleTerm) {
    using namespace mk;
    auto t = letrec("g", {"x"}, letrec("h", {}, var_term("x"), call("h", {})),
                    call("g", {int_term(1)}));
    EXPECT_EQ(pretty_print(t), kExample);
}

TEST(PrettyPrint, AssignThenRead) {
    auto t = mk::seq(mk::assign("x", mk::int_term(2)), mk::var_term("x"));
    EXPECT_EQ(pretty_print(t), "x := 2; x");
}

TEST(PrettyPrint, ParenthesizesOpenEndedFirstOfSeq) {
    using namespace mk;
    auto t = seq(letrec("f", {}, int_term(1), call("f", {})), int_term(2));
    auto back = parse(pretty_print(t));
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, *t);
}

TEST(PrettyPrint, OperatorAssociativity) {
    using namespace mk;
    auto t = e(binop(BinOpKind::sub, int_(1), binop(BinOpKind::sub, int_(2), int_(3))));
    EXPECT_EQ(pretty_print(t), "1 - (2 - 3)");
    auto back = parse(pretty_print(t));
    EXPECT_EQ(*back, *t);
    auto u = e(binop(BinOpKind::lt, binop(BinOpKind::add, var("a"), int_(1)), int_(-4)));
    EXPECT_EQ(*parse(pretty_print(u)), *u);
}

TEST(FreeVars, SingleVariable) { EXPECT_EQ(free_vars(*parse("x")), IdentSet{"x"}); }

TEST(FreeVars, InnerBodyOfExample) {
    EXPECT_EQ(free_vars(*parse("letrec h() = { x } in h()")), IdentSet{"x"});
}

TEST(FreeVars, BoundParameterIsNotFree) {
    EXPECT_EQ(free_vars(*parse("letrec h(y) = { y } in h(x)")), IdentSet{"x"});
}

TEST(FreeVars, AssignmentTargetOccurs) {
    EXPECT_EQ(free_vars(*parse("z := 1")), IdentSet{"z"});
    EXPECT_TRUE(free_vars(*parse(kExample)).empty());
}

TEST(Subst, Variable) {
    EXPECT_EQ(pretty_print(subst_values(parse("x"), {{"x", Value::integer(3)}})), "3");
}

TEST(Subst, NestedCallTail) {
    EXPECT_EQ(pretty_print(subst_values(parse("g(2, f(x))"), {{"x", Value::integer(7)}})),
              "g(2, f(7))");
}

TEST(Subst, ShadowedParameterUntouched) {
    EXPECT_EQ(pretty_print(
                  subst_values(parse("letrec h(x) = { x } in h(x)"), {{"x", Value::integer(1)}})),
              "letrec h(x) = { x } in h(1)");
}

TEST(Subst, EmptyMapIsIdentity) {
    auto t = parse(kExample);
    EXPECT_EQ(*subst_values(t, {}), *t);
}

TEST(Parse, ExampleAst) {
    using namespace mk;
    auto expected = letrec("g", {"x"}, letrec("h", {}, var_term("x"), call("h", {})),
                           call("g", {int_term(1)}));
    EXPECT_EQ(*parse(kExample), *expected);
}

TEST(Parse, Conditional) {
    using namespace mk;
    auto expected = ite(e(bool_(true)), int_term(1), int_term(2));
    EXPECT_EQ(*parse("if true then { 1 } else { 2 }"), *expected);
}

TEST(Parse, IncompleteAssignment) {
    auto r = parse_term("x := ");
    ASSERT_FALSE(r.ok());
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].code, "PARSE_UNEXPECTED_TOKEN");
    EXPECT_EQ(r.diagnostics[0].span.start_offset, 5u);
}

TEST(Parse, Unterminated) {
    auto r = parse_term("letrec f() = { 1 ");
    ASSERT_FALSE(r.ok());
    EXPECT_EQ(r.diagnostics[0].code, "PARSE_UNTERMINATED");
}

TEST(Parse, OtherErrors) {
    EXPECT_EQ(parse_term("1 + f(2)").diagnostics.at(0).code, "PARSE_NON_EXPR_OPERAND");
    EXPECT_EQ(parse_term("letrec f(a, a) = { a } in f(1, 2)").diagnostics.at(0).code,
              "PARSE_DUPLICATE_PARAM");
    EXPECT_EQ(parse_term("99999999999999999999").diagnostics.at(0).code, "PARSE_INT_OVERFLOW");
    EXPECT_EQ(parse_term("1 $ 2").diagnostics.at(0).code, "PARSE_UNEXPECTED_CHAR");
    EXPECT_TRUE(parse_term("-9223372036854775808").ok());
    EXPECT_FALSE(parse_term("9223372036854775808").ok());
}

TEST(Parse, SpansAreInsideSource) {
    std::string src = "letrec f(a) = {\n  a + 1\n} in\nf(2); f(3)";
    auto t = parse(src);
    ASSERT_TRUE(t);
    EXPECT_EQ(t->span.start_offset, 0u);
    EXPECT_EQ(t->span.end_offset, src.size());
    auto& lr = std::get<Term::LetRec>(t->node);
    EXPECT_EQ(lr.body->span.line, 2);
    EXPECT_EQ(lr.body->span.column, 3);
}

TEST(Parse, CommentsAndAssociativity) {
    auto t = parse("// leading\na; b; c // trailing");
    auto& s = std::get<Term::Seq>(t->node);
    EXPECT_TRUE(as<Term::Seq>(*s.second));
    auto u = parse("x := y := 1; 2");
    auto& s2 = std::get<Term::Seq>(u->node);
    EXPECT_TRUE(as<Term::Assign>(*s2.first));
}

TEST(Validate, ExampleIsClean) { EXPECT_TRUE(validate(*parse(kExample)).empty()); }

TEST(Validate, OpenTerm) {
    EXPECT_EQ(codes(validate(*parse("x"))), std::vector<std::string>{"SCOPE_UNBOUND_VAR"});
}

TEST(Validate, DuplicateParameterAcrossFunctions) {
    auto ds = validate(*parse("letrec f(x) = { x } in letrec g(x) = { x } in f(g(1))"));
    ASSERT_EQ(codes(ds), std::vector<std::string>{"UNIQ_PARAM"});
    EXPECT_NE(ds[0].message.find("'x'"), std::string::npos);
    EXPECT_TRUE(validate(*parse("letrec f(x) = { x } in letrec g(x) = { x } in f(g(1))"),
                         {.allow_param_shadowing = true})
                    .empty());
}

TEST(Validate, FunctionsAndArity) {
    EXPECT_EQ(codes(validate(*parse("f(1)"))), std::vector<std::string>{"SCOPE_UNBOUND_FUN"});
    EXPECT_EQ(codes(validate(*parse("letrec f(a) = { a } in f(1, 2)"))),
              std::vector<std::string>{"SCOPE_ARITY"});
    EXPECT_TRUE(validate(*parse("letrec f(a) = { if a < 1 then { 0 } else { f(a - 1) } } in f(3)"))
                    .empty());
    // a function is not visible outside its letrec
    EXPECT_EQ(codes(validate(*parse("(letrec f() = { 1 } in 2); f()"))),
              std::vector<std::string>{"SCOPE_UNBOUND_FUN"});
}
