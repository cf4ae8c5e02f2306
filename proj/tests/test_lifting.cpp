#include <gtest/gtest.h>

#include "contpass/bigstep.hpp"
#include "contpass/lifting.hpp"
#include "contpass/parser.hpp"
#include "contpass/program.hpp"

using namespace contpass;

namespace {

TermPtr parse(const std::string& src) {
    auto r = parse_term(src);
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : render(r.diagnostics[0]));
    return r.term;
}

const char* kOriginal = "letrec g(x) = { letrec h() = { x } in h() } in g(1)";
const char* kLifted = "letrec g(x) = { letrec h(x) = { x } in h(x) } in g(1)";

// Positions of the subterms that print as the given text.
PositionSet positions_of(const Term& t, const PositionSet& set, const std::string& text) {
    PositionSet out;
    for (auto& p : set)
        if (pretty_print(*subterm(t, p)) == text) out.insert(p);
    return out;
}

}  // namespace

TEST(TailPositions, Sequence) {
    auto t = parse("a; b");
    EXPECT_EQ(tail_positions(*t), (PositionSet{{}, {1}}));
}

TEST(TailPositions, Conditional) {
    auto t = parse("if c then { a } else { b }");
    EXPECT_EQ(tail_positions(*t), (PositionSet{{}, {1}, {2}}));
}

TEST(TailPositions, AssignmentRhsExcluded) {
    EXPECT_EQ(tail_positions(*parse("x := f(1)")), (PositionSet{{}}));
}

TEST(TailPositions, LetRecContinuation) {
    auto t = parse("letrec f() = { 1 } in f(); 2");
    auto tails = tail_positions(*t);
    EXPECT_TRUE(tails.count({1}));
    EXPECT_TRUE(tails.count({1, 1}));
    EXPECT_FALSE(tails.count({0}));
    EXPECT_FALSE(tails.count({1, 0}));
}

TEST(LocalPositions, Examples) {
    auto t = parse("letrec f(x) = { a } in b");
    auto loc = local_positions(*t);
    EXPECT_TRUE(loc.count({1}));
    EXPECT_FALSE(loc.count({0}));
    auto u = parse("x := m");
    EXPECT_TRUE(local_positions(*u).count({0}));
    auto v = parse("letrec f(y) = { y } in f(m)");
    EXPECT_EQ(positions_of(*v, local_positions(*v), "m").size(), 1u);
}

TEST(CheckLiftable, ExampleIsLiftable) {
    auto t = parse(kOriginal);
    auto target = make_target(*t, "x", "g");
    EXPECT_EQ(target.inner_funs, std::set<std::string>{"h"});
    auto r = check_liftable(*t, target);
    EXPECT_TRUE(r.liftable);
    EXPECT_TRUE(r.violations.empty());
}

TEST(CheckLiftable, CallInFirstOfSequence) {
    auto t = parse("letrec g(x) = { letrec h() = { x } in h(); 0 } in g(1)");
    auto r = check_liftable(*t, make_target(*t, "x", "g"));
    EXPECT_FALSE(r.liftable);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].call, "h()");
    EXPECT_EQ(r.violations[0].span.start_offset, 38u);
}

TEST(CheckLiftable, NoInnerFunctions) {
    auto t = parse("letrec g(x) = { x } in g(1)");
    auto target = make_target(*t, "x", "g");
    EXPECT_TRUE(target.inner_funs.empty());
    EXPECT_TRUE(check_liftable(*t, target).liftable);
}

TEST(CheckLiftable, TailOfSiblingBodyCounts) {
    auto t = parse(
        "letrec g(x) = { letrec h() = { x } in letrec k() = { h() } in k() } in g(1)");
    EXPECT_TRUE(check_liftable(*t, make_target(*t, "x", "g")).liftable);
    EXPECT_FALSE(parse_term("letrec g(x) = { letrec h() = { x } in letrec k() = { h() + 1 } in "
                            "k() } in g(1)")
                     .ok());
    auto w = parse(
        "letrec g(x) = { letrec h() = { x } in letrec k() = { y := h(); 1 } in k() } in g(1)");
    EXPECT_FALSE(check_liftable(*w, make_target(*w, "x", "g")).liftable);
}

TEST(CheckLiftable, MissingTarget) {
    auto t = parse(kOriginal);
    try {
        make_target(*t, "y", "g");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::target_not_found);
    }
    LiftTarget bogus{"x", "nope", {}};
    EXPECT_THROW(check_liftable(*t, bogus), Error);
}

TEST(LiftParam, Example) {
    auto t = parse(kOriginal);
    auto lifted = lift_param(t, make_target(*t, "x", "g"));
    EXPECT_EQ(pretty_print(lifted), kLifted);
    EXPECT_EQ(pretty_print(alpha_rename(lifted)),
              "letrec g(x) = { letrec h(x_1) = { x_1 } in h(x) } in g(1)");
}

TEST(LiftParam, NoInnerFunctionsIsIdentity) {
    auto t = parse("letrec g(x) = { x + 1 } in g(1)");
    EXPECT_EQ(*lift_param(t, make_target(*t, "x", "g")), *t);
}

TEST(LiftParam, AppendsAfterExistingParams) {
    auto t = parse("letrec g(x) = { letrec h(a) = { a } in h(x) } in g(3)");
    EXPECT_EQ(pretty_print(lift_param(t, make_target(*t, "x", "g"))),
              "letrec g(x) = { letrec h(a, x) = { a } in h(x, x) } in g(3)");
}

TEST(LiftParam, AssignmentTargetsUnchanged) {
    auto t = parse("letrec g(x) = { letrec h() = { x := x + 1; x } in h() } in g(1)");
    auto lifted = lift_param(t, make_target(*t, "x", "g"));
    EXPECT_EQ(pretty_print(lifted),
              "letrec g(x) = { letrec h(x) = { x := x + 1; x } in h(x) } in g(1)");
    EXPECT_EQ(eval_naive(*t).value, eval_naive(*lifted).value);
}

TEST(LiftParam, RefusesNonLiftable) {
    auto t = parse("letrec g(x) = { letrec h() = { x } in h(); 0 } in g(1)");
    try {
        lift_param(t, make_target(*t, "x", "g"));
        FAIL();
    } catch (const NotLiftable& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_liftable);
        EXPECT_FALSE(e.report().liftable);
    }
}

TEST(LiftAll, Example) {
    EXPECT_EQ(pretty_print(lift_all(parse(kOriginal))), kLifted);
}

TEST(LiftAll, FixpointOnLiftedTerm) {
    auto t = parse(kLifted);
    EXPECT_EQ(*lift_all(t), *t);
}

TEST(LiftAll, TwoLevels) {
    auto t = parse(
        "letrec g(x) = { letrec h() = { letrec k() = { x } in k() } in h() } in g(1)");
    auto lifted = lift_all(t);
    EXPECT_EQ(pretty_print(lifted),
              "letrec g(x) = { letrec h(x) = { letrec k(x) = { x } in k(x) } in h(x) } in g(1)");
    EXPECT_EQ(eval_naive(*t).value, eval_naive(*lifted).value);
    EXPECT_TRUE(lift_candidates(*lifted).empty());
    EXPECT_TRUE(validate(*lifted, {.allow_param_shadowing = true}).empty());
}

TEST(LiftAll, ParameterOrderByOwnerDepthThenName) {
    auto t = parse(
        "letrec f(b, a) = { letrec g(x) = { letrec h() = { x + a + b } in h() } in g(1) } in "
        "f(10, 20)");
    auto lifted = lift_all(t);
    EXPECT_EQ(pretty_print(lifted),
              "letrec f(b, a) = { letrec g(x, a, b) = { letrec h(a, b, x) = { x + a + b } in "
              "h(a, b, x) } in g(1, a, b) } in f(10, 20)");
    EXPECT_EQ(eval_naive(*t).value, eval_naive(*lifted).value);
}

TEST(LiftAll, ReportsFirstFailingTarget) {
    auto t = parse("letrec g(x) = { letrec h() = { x } in h(); 0 } in g(1)");
    EXPECT_THROW(lift_all(t), NotLiftable);
}

TEST(FloatBlocks, Example) {
    auto p = float_blocks(lift_all(parse(kOriginal)));
    ASSERT_EQ(p.functions.size(), 2u);
    EXPECT_EQ(p.functions[0].name, "g");
    EXPECT_EQ(pretty_print(p.functions[0].body), "h(x)");
    EXPECT_EQ(p.functions[1].name, "h");
    EXPECT_EQ(p.functions[1].params, std::vector<std::string>{"x"});
    EXPECT_EQ(pretty_print(p.functions[1].body), "x");
    EXPECT_EQ(pretty_print(p.main), "g(1)");
    EXPECT_TRUE(validate_program(p).empty());
}

TEST(FloatBlocks, NothingToFloat) {
    auto p = float_blocks(parse("5"));
    EXPECT_TRUE(p.functions.empty());
    EXPECT_EQ(pretty_print(p.main), "5");
}

TEST(FloatBlocks, TwoLevels) {
    auto p = float_blocks(lift_all(parse(
        "letrec g(x) = { letrec h() = { letrec k() = { x } in k() } in h() } in g(1)")));
    EXPECT_EQ(p.functions.size(), 3u);
    EXPECT_EQ(pretty_print(p.main), "g(1)");
}

TEST(FloatBlocks, Errors) {
    try {
        float_blocks(parse(kOriginal));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_closed);
    }
    try {
        float_blocks(parse("letrec f() = { 1 } in (letrec f() = { 2 } in f())"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::duplicate_function);
    }
}

TEST(Program, RoundTrip) {
    auto p = float_blocks(lift_all(parse(kOriginal)));
    auto text = print_program(p);
    EXPECT_EQ(text, "def g(x) = { h(x) }\ndef h(x) = { x }\nmain { g(1) }\n");
    auto back = parse_program(text);
    ASSERT_TRUE(back.ok());
    EXPECT_EQ(*back.program, p);
    EXPECT_TRUE(looks_like_program(text));
    EXPECT_FALSE(looks_like_program(kOriginal));
}

TEST(Program, Validation) {
    auto p = parse_program("def f(a) = { b }\ndef f(c) = { g(c) }\nmain { f(1, 2) }");
    ASSERT_TRUE(p.ok());
    std::vector<std::string> codes;
    for (auto& d : validate_program(*p.program)) codes.push_back(d.code);
    EXPECT_EQ(codes, (std::vector<std::string>{"SCOPE_UNBOUND_VAR", "UNIQ_FUNCTION",
                                               "SCOPE_UNBOUND_FUN", "SCOPE_ARITY"}));
}

TEST(LiftEnv, EmptyStaysEmpty) {
    LiftTarget target{"x", "g", {"h"}};
    EXPECT_TRUE(lift_env({}, target).empty());
}

TEST(LiftEnv, InnerClosureGainsParam) {
    LiftTarget target{"x", "g", {"h"}};
    auto h = std::make_shared<const Closure>(
        Closure{{"a"}, parse("a"), VarEnv{{"x", 1}}, FunEnv{}});
    auto out = lift_env({{"h", h}}, target);
    EXPECT_EQ(out.at("h")->params, (std::vector<std::string>{"a", "x"}));
    EXPECT_TRUE(out.at("h")->captured_vars.empty());
    EXPECT_EQ(pretty_print(out.at("h")->body), "a");
}

TEST(LiftEnv, OtherClosureLiftsBodyOnly) {
    LiftTarget target{"x", "g", {"h"}};
    auto f = std::make_shared<const Closure>(Closure{{"b"}, parse("h(b)"), VarEnv{}, FunEnv{}});
    auto out = lift_env({{"f", f}}, target);
    EXPECT_EQ(out.at("f")->params, std::vector<std::string>{"b"});
    EXPECT_EQ(pretty_print(out.at("f")->body), "h(b, x)");
}

TEST(LiftEnv, OccurrencesDuringMonitoredRun) {
    auto t = parse(kOriginal);
    EnvLifter lifter(make_target(*t, "x", "g"));
    std::size_t sites = 0, occurrences = 0, raw = 0;
    EvalOptions opt;
    opt.on_call = [&](const CallSite& site) {
        ++sites;
        occurrences += lifter.param_occurrences(site.funs);
        for (auto* env : env_set(site.funs)) raw += env->contains("x") ? 1 : 0;
    };
    eval_optimised(*t, opt);
    EXPECT_EQ(sites, 2u);
    EXPECT_EQ(occurrences, 0u);
    EXPECT_GT(raw, 0u);  // before lifting, h does capture x
}
