#include <gtest/gtest.h>

#include "contpass/bigstep.hpp"
#include "contpass/lifting.hpp"
#include "contpass/machines.hpp"
#include "contpass/parser.hpp"

using namespace contpass;

namespace {

ConvProgram conv_prog(const std::string& src) {
    auto p = parse_program(src);
    EXPECT_TRUE(p.ok()) << (p.diagnostics.empty() ? "" : render(p.diagnostics[0]));
    auto r = to_convertible(*p.program);
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : render(r.diagnostics[0]));
    return *r.program;
}

CpsProgram cps_prog(const std::string& src) {
    auto r = parse_cps_program(src);
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : render(r.diagnostics[0]));
    return *r.program;
}

ConvTail conv_tail(const std::string& term) {
    std::vector<Diagnostic> diags;
    auto t = to_convertible(*parse_term(term).term, diags);
    return std::get<ConvTerm::TailOf>(t->node).tail;
}

ErrorCode error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::stuck;
}

const char* kExample = "letrec g(x) = { letrec h() = { x } in h() } in g(1)";

ConvProgram example_program() {
    auto r = to_convertible(float_blocks(lift_all(parse_term(kExample).term)));
    EXPECT_TRUE(r.ok());
    return *r.program;
}

std::string dump(const ConvState& s) { return to_json(s).dump(); }
std::string dump(const CpsState& s) { return to_json(s).dump(); }

}  // namespace

TEST(EvalExpr, Examples) {
    EXPECT_EQ(eval_expr(*mk::int_(5), {}), Value::integer(5));
    EXPECT_EQ(eval_expr(*mk::var("x"), {{"x", Value::integer(3)}}), Value::integer(3));
    auto e = parse_term("x + 1 < 5").term;
    EXPECT_EQ(eval_expr(*std::get<Term::E>(e->node).expr, {{"x", Value::integer(3)}}),
              Value::boolean(true));
    EXPECT_EQ(error_of([] { eval_expr(*mk::var("y"), {}); }), ErrorCode::unbound_var);
}

TEST(ConvertibleMachine, EnterCallee) {
    auto p = conv_prog("def f(x) = { x }\nmain { f(42) }");
    ConvState s{ConvState::TailState{{}, Context{{Frame{"f", {Value::integer(42)}, false}}}}};
    auto r = step_convertible(s, p);
    EXPECT_EQ(r.rule, 10);
    ConvState want{ConvState::HeadState{ConvTerm::leaf(mk::var("x")), {}, {{"x", Value::integer(42)}}}};
    EXPECT_EQ(dump(r.state), dump(want));
}

TEST(ConvertibleMachine, NestedCallLeavesHoleFrame) {
    ConvState s{ConvState::TailState{conv_tail("g(2, f(1))"), {}}};
    auto r = step_convertible(s, ConvProgram{});
    EXPECT_EQ(r.rule, 9);
    ConvState want{ConvState::TailState{conv_tail("f(1)"), Context{{Frame{"g", {Value::integer(2)}, true}}}}};
    EXPECT_EQ(dump(r.state), dump(want));
}

TEST(ConvertibleMachine, FinalValue) {
    ConvState s{ConvState::HeadState{ConvTerm::leaf(mk::var("x")), {}, {{"x", Value::integer(7)}}}};
    auto r = step_convertible(s, ConvProgram{});
    EXPECT_EQ(r.rule, 6);
    ASSERT_TRUE(r.state.done());
    EXPECT_EQ(std::get<ConvState::Done>(r.state.node).value, Value::integer(7));
}

TEST(ConvertibleMachine, TailEntrySubstitutesAndNormalizes) {
    ConvState s{ConvState::HeadState{ConvTerm::tail(conv_tail("g(x + 1, f(x))")), {},
                                     {{"x", Value::integer(4)}}}};
    auto r = step_convertible(s, ConvProgram{});
    EXPECT_EQ(r.rule, 7);
    auto& t = std::get<ConvState::TailState>(r.state.node);
    EXPECT_EQ(print(t.tail), "g(5, f(4))");
}

TEST(ConvertibleMachine, ReturnFillsHoleOrDiscards) {
    ConvState s{ConvState::HeadState{ConvTerm::leaf(mk::int_(3)),
                                     Context{{Frame{"a", {}, false}, Frame{"g", {Value::integer(2)}, true}}},
                                     {}}};
    auto r = step_convertible(s, ConvProgram{});
    EXPECT_EQ(r.rule, 5);
    auto& t = std::get<ConvState::TailState>(r.state.node);
    EXPECT_EQ(t.stack.frames.back(), (Frame{"g", {Value::integer(2), Value::integer(3)}, false}));

    ConvState d{ConvState::HeadState{ConvTerm::leaf(mk::int_(3)), Context{{Frame{"a", {}, false}}}, {}}};
    auto r2 = step_convertible(d, ConvProgram{});
    EXPECT_EQ(r2.rule, 4);
    EXPECT_EQ(std::get<ConvState::TailState>(r2.state.node).stack.frames.back(), (Frame{"a", {}, false}));
}

TEST(ConvertibleMachine, WorkedExampleRunsToOne) {
    auto p = example_program();
    auto r = run_machine(p);
    EXPECT_EQ(r.value, Value::integer(1));
    EXPECT_EQ(r.value, eval_naive(*parse_term(kExample).term).value);
}

TEST(ConvertibleMachine, LiteralMainIsOneStep) {
    auto r = run_machine(conv_prog("main { 5 }"));
    EXPECT_EQ(r.value, Value::integer(5));
    EXPECT_EQ(r.steps, 1u);
}

TEST(ConvertibleMachine, RuleSequence) {
    std::vector<int> rules;
    MachineOptions opts;
    opts.trace = [&](const MachineEvent& e) { rules.push_back(e.rule); };
    auto r = run_machine(conv_prog("def add(a, b) = { a + b }\ndef inc(x) = { x + 1 }\n"
                                   "def go(y) = { y := y + 1; if y < 2 then { add(y, inc(2)) } else { 0 } }\n"
                                   "main { go(0) }"),
                         opts);
    EXPECT_EQ(r.value, Value::integer(4));
    // enter go, assign, if, tail entry, push add(1, hole), push inc(2),
    // enter inc, fill add, enter add, final
    EXPECT_EQ(rules, (std::vector<int>{7, 8, 10, 1, 2, 7, 9, 8, 10, 5, 10, 6}));
}

TEST(ConvertibleMachine, SequencedCallsRunInOrder) {
    std::vector<int> rules;
    MachineOptions opts;
    opts.trace = [&](const MachineEvent& e) { rules.push_back(e.rule); };
    auto r = run_machine(conv_prog("def a(x) = { x }\ndef b(x) = { x + 9 }\nmain { a(1); b(2) }"), opts);
    EXPECT_EQ(r.value, Value::integer(11));
    EXPECT_EQ(rules, (std::vector<int>{7, 8, 8, 10, 4, 10, 6}));
}

TEST(ConvertibleMachine, Errors) {
    auto loop = conv_prog("def f(x) = { f(x) }\nmain { f(1) }");
    MachineOptions opts;
    opts.fuel = 50;
    EXPECT_EQ(error_of([&] { run_machine(loop, opts); }), ErrorCode::fuel_exhausted);
    auto bad = conv_prog("main { if 1 then { 1 } else { 2 } }");
    EXPECT_EQ(error_of([&] { run_machine(bad); }), ErrorCode::type_error);
}

TEST(CpsMachine, PushHole) {
    auto p = cps_prog("main { push g(2, _); push f(1); invoke }");
    CpsState s{CpsState::TailState{std::get<CpsTerm::TailOf>(p.main->node).tail, {}}};
    auto r = step_cps(s, p);
    EXPECT_EQ(r.rule, 9);
    auto& t = std::get<CpsState::TailState>(r.state.node);
    EXPECT_EQ(print(t.tail), "push f(1); invoke");
    EXPECT_EQ(t.stack.frames, (std::vector<Frame>{Frame{"g", {Value::integer(2)}, true}}));
}

TEST(CpsMachine, InvokeEntersCallee) {
    auto p = cps_prog("def f(x) = { invoke x }\nmain { push f(42); invoke }");
    CpsState s{CpsState::TailState{{}, Continuation{{Frame{"f", {Value::integer(42)}, false}}}}};
    auto r = step_cps(s, p);
    EXPECT_EQ(r.rule, 10);
    CpsState want{CpsState::HeadState{CpsTerm::leaf(mk::var("x")), {}, {{"x", Value::integer(42)}}}};
    EXPECT_EQ(dump(r.state), dump(want));
}

TEST(CpsMachine, HoleThenInvokeIsStuck) {
    auto p = cps_prog("def f(a, b) = { invoke a }\nmain { push f(1, _); invoke }");
    EXPECT_EQ(error_of([&] { run_machine(p); }), ErrorCode::stuck);
}

TEST(CpsMachine, ArityMismatch) {
    auto p = cps_prog("def f(x) = { invoke x }\nmain { push f(1, 2); invoke }");
    EXPECT_EQ(error_of([&] { run_machine(p); }), ErrorCode::arity_mismatch);
}

TEST(CpsMachine, ImageOfExampleMatchesStepCount) {
    auto p = example_program();
    auto a = run_machine(p);
    auto b = run_machine(cps_convert(p));
    EXPECT_EQ(b.value, Value::integer(1));
    EXPECT_EQ(a.steps, b.steps);
}

TEST(ContextConversion, IsStructural) {
    Context c{{Frame{"g", {Value::integer(2)}, true}, Frame{"f", {}, false}}};
    auto k = convert_context(c);
    EXPECT_EQ(k.frames, c.frames);
    EXPECT_EQ(invert_continuation(k), c);
}

TEST(Bisim, WorkedExample) {
    auto r = bisim_check(example_program());
    EXPECT_TRUE(r.lockstep) << r.reason;
    ASSERT_TRUE(r.value);
    EXPECT_EQ(*r.value, Value::integer(1));
}

TEST(Bisim, LiteralMain) {
    auto r = bisim_check(conv_prog("main { 0 }"));
    EXPECT_TRUE(r.lockstep);
    EXPECT_EQ(r.steps, 1u);
}

TEST(Bisim, RicherProgram) {
    auto p = conv_prog(
        "def sum(n, acc) = { if n < 1 then { acc } else { sum(n - 1, acc + n) } }\n"
        "def twice(x) = { x := x + x; x }\n"
        "def pair(a, b) = { a - b }\n"
        "def run(z) = { twice(z); pair(1, sum(z, twice(0))) }\n"
        "main { run(3) }");
    auto r = bisim_check(p);
    EXPECT_TRUE(r.lockstep) << r.reason;
    ASSERT_TRUE(r.value);
    EXPECT_EQ(*r.value, Value::integer(-5));
    EXPECT_EQ(run_machine(p).steps, r.steps);
}

TEST(Bisim, SharedFailureIsStillLockstep) {
    auto r = bisim_check(conv_prog("def f(x) = { f(x) }\nmain { f(1) }"), 40);
    EXPECT_TRUE(r.lockstep);
    EXPECT_EQ(r.error, ErrorCode::fuel_exhausted);
}

TEST(LazyMachine, AgreesWithEagerMachine) {
    for (auto p : {example_program(),
                   conv_prog("def add(a, b) = { a + b }\ndef inc(x) = { x + 1 }\n"
                             "def go(y) = { add(y + 1, inc(y)) }\nmain { go(1) }")}) {
        auto a = run_machine(p);
        auto b = run_lazy_machine(p);
        EXPECT_EQ(a.value, b.value);
        EXPECT_EQ(a.steps, b.steps);
    }
}
