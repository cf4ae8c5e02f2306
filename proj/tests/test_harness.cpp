#include <gtest/gtest.h>

#include "contpass/bigstep.hpp"
#include "contpass/harness.hpp"
#include "contpass/lifting.hpp"
#include "contpass/machines.hpp"
#include "contpass/parser.hpp"

using namespace contpass;

namespace {

const char* kOriginal = "letrec g(x) = { letrec h() = { x } in h() } in g(1)";

TermPtr parse(const std::string& src) {
    auto r = parse_term(src);
    EXPECT_TRUE(r.ok()) << src;
    return r.term;
}

ConvProgram conv_prog(const std::string& src) {
    auto p = parse_program(src);
    EXPECT_TRUE(p.ok());
    auto r = to_convertible(*p.program);
    EXPECT_TRUE(r.ok());
    return *r.program;
}

ConvTermPtr conv_head(const std::string& src) {
    std::vector<Diagnostic> diags;
    auto t = to_convertible(*parse(src), diags);
    EXPECT_TRUE(diags.empty());
    return t;
}

bool has_call(const Term& t) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::Call>) return true;
            else if constexpr (std::is_same_v<T, Term::E>) return false;
            else if constexpr (std::is_same_v<T, Term::Assign>) return has_call(*x.rhs);
            else if constexpr (std::is_same_v<T, Term::If>)
                return has_call(*x.cond) || has_call(*x.then_branch) || has_call(*x.else_branch);
            else if constexpr (std::is_same_v<T, Term::Seq>) return has_call(*x.first) || has_call(*x.second);
            else return has_call(*x.body) || has_call(*x.cont);
        },
        t.node);
}

// Every (param, owner) pair of the term.
void all_targets(const Term& t, std::vector<std::pair<std::string, std::string>>& out) {
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Term::LetRec>) {
                for (auto& p : x.params) out.emplace_back(p, x.fun);
                all_targets(*x.body, out);
                all_targets(*x.cont, out);
            } else if constexpr (std::is_same_v<T, Term::Call>) {
                for (auto& a : x.args) all_targets(*a, out);
            } else if constexpr (std::is_same_v<T, Term::Assign>) {
                all_targets(*x.rhs, out);
            } else if constexpr (std::is_same_v<T, Term::If>) {
                all_targets(*x.cond, out);
                all_targets(*x.then_branch, out);
                all_targets(*x.else_branch, out);
            } else if constexpr (std::is_same_v<T, Term::Seq>) {
                all_targets(*x.first, out);
                all_targets(*x.second, out);
            }
        },
        t.node);
}

GenConfig config(GenMode mode, std::uint64_t seed = 1) {
    GenConfig c;
    c.mode = mode;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(SplitMix64, ReferenceSequence) {
    SplitMix64 r(0);
    EXPECT_EQ(r.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(r.next(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(r.next(), 0x06c45d188009454fULL);
}

TEST(SplitMix64, RangeStaysInBounds) {
    SplitMix64 r(9);
    for (int i = 0; i < 1000; ++i) {
        auto v = r.range(-3, 9);
        EXPECT_GE(v, -3);
        EXPECT_LE(v, 9);
    }
}

TEST(Generator, SameConfigSameSequence) {
    for (auto mode : {GenMode::general, GenMode::liftable, GenMode::convertible}) {
        Generator a(config(mode, 42)), b(config(mode, 42));
        for (int i = 0; i < 20; ++i) EXPECT_EQ(pretty_print(a.next_term()), pretty_print(b.next_term()));
    }
}

TEST(Generator, SeedsDiffer) {
    EXPECT_NE(pretty_print(gen_term(config(GenMode::general, 1))),
              pretty_print(gen_term(config(GenMode::general, 2))));
}

TEST(Generator, DepthOneIsClosed) {
    GenConfig c = config(GenMode::general);
    c.max_depth = 1;
    Generator g(c);
    for (int i = 0; i < 50; ++i) EXPECT_TRUE(validate(*g.next_term()).empty());
}

TEST(Generator, GeneralTermsValidate) {
    Generator g(config(GenMode::general, 5));
    for (int i = 0; i < 300; ++i) {
        auto t = g.next_term();
        auto d = validate(*t);
        EXPECT_TRUE(d.empty()) << pretty_print(t) << "\n" << render(d[0]);
    }
}

TEST(Generator, LiftableTermsPassEveryTarget) {
    Generator g(config(GenMode::liftable, 5));
    for (int i = 0; i < 300; ++i) {
        auto t = g.next_term();
        ASSERT_TRUE(validate(*t).empty()) << pretty_print(t);
        std::vector<std::pair<std::string, std::string>> targets;
        all_targets(*t, targets);
        for (auto& [param, owner] : targets) {
            auto r = check_liftable(*t, make_target(*t, param, owner));
            EXPECT_TRUE(r.liftable) << param << " of " << owner << " in " << pretty_print(t);
        }
    }
}

TEST(Generator, ConvertibleTermsReachTheClassifier) {
    Generator g(config(GenMode::convertible, 5));
    for (int i = 0; i < 200; ++i) {
        auto t = g.next_term();
        ASSERT_TRUE(validate(*t).empty()) << pretty_print(t);
        auto r = to_convertible(float_blocks(lift_all(t)));
        EXPECT_TRUE(r.ok()) << pretty_print(t) << "\n" << render(r.diagnostics[0]);
    }
}

TEST(Generator, ConvertibleProgramsUnfloatToValidTerms) {
    Generator g(config(GenMode::convertible, 8));
    for (int i = 0; i < 100; ++i) {
        auto p = g.next_program();
        EXPECT_TRUE(validate_program(to_program(p)).empty()) << print_program(p);
        EXPECT_TRUE(validate(*unfloat(p)).empty());
    }
}

TEST(DiffEval, EmptyRun) {
    auto r = diff_eval(config(GenMode::general), 0);
    EXPECT_EQ(r.total, 0u);
    EXPECT_TRUE(r.ok());
}

TEST(DiffEval, ExampleAgrees) {
    auto s = diff_eval_sample(*parse(kOriginal));
    EXPECT_EQ(s.verdict, SampleVerdict::agreed) << s.property << " " << s.details;
}

TEST(DiffEval, HundredSamplesAgree) {
    auto r = diff_eval(config(GenMode::general, 3), 100);
    EXPECT_EQ(r.total, 100u);
    EXPECT_EQ(r.total, r.agreed + r.skipped_fuel + r.failures.size());
    EXPECT_TRUE(r.ok()) << r.to_json().dump(2);
}

TEST(DiffEval, DivergenceIsSkippedNotFailed) {
    auto s = diff_eval_sample(*parse("letrec f(n) = { f(n + 1) } in f(0)"), CheckOptions{500});
    EXPECT_EQ(s.verdict, SampleVerdict::skipped_fuel);
}

TEST(DiffEval, FaultsAreCaught) {
    for (auto f : {Fault::drop_gc_at_val, Fault::swap_seq_env}) {
        CheckOptions o;
        o.fault = f;
        EXPECT_FALSE(diff_eval(config(GenMode::general), 200, o).ok());
    }
}

TEST(DiffEval, ReportsAreReproducible) {
    CheckOptions o;
    o.fault = Fault::swap_seq_env;
    auto a = diff_eval(config(GenMode::general, 11), 100, o).to_json().dump();
    auto b = diff_eval(config(GenMode::general, 11), 100, o).to_json().dump();
    EXPECT_EQ(a, b);
}

TEST(DiffReport, JsonShape) {
    auto j = diff_eval(config(GenMode::general), 5).to_json();
    EXPECT_EQ(j["schema"], "contpass-report/1");
    EXPECT_EQ(j["total"], 5);
    EXPECT_EQ(j["config"]["mode"], "general");
    EXPECT_TRUE(j["failures"].is_array());
}

TEST(Lifting, ExampleAgrees) {
    auto s = lifting_sample(parse(kOriginal));
    EXPECT_EQ(s.verdict, SampleVerdict::agreed) << s.property << " " << s.details;
    EXPECT_GT(s.capture_sites, 0u);
    EXPECT_EQ(s.captured_params, 0u);
}

TEST(Lifting, NoInnerFunctions) {
    auto s = lifting_sample(parse("letrec f(a) = { a + 1 } in f(2)"));
    EXPECT_EQ(s.verdict, SampleVerdict::agreed);
    EXPECT_EQ(s.capture_sites, 0u);
}

TEST(Lifting, SamplesAgree) {
    auto r = check_lifting(config(GenMode::liftable, 4), 100);
    EXPECT_TRUE(r.ok()) << r.to_json().dump(2);
    EXPECT_EQ(r.captured_params, 0u);
    EXPECT_GT(r.capture_sites, 0u);
}

TEST(Lifting, FaultsAreCaught) {
    for (auto f : {Fault::drop_gc_at_val, Fault::swap_seq_env}) {
        CheckOptions o;
        o.fault = f;
        EXPECT_FALSE(check_lifting(config(GenMode::liftable), 200, o).ok());
    }
}

TEST(EarlyEval, SubstitutedAndLazyAgree) {
    auto p = conv_prog("def g(a) = { a + 1 }\ndef f(b) = { b - 1 }\ndef g2(a, b) = { a + b }\nmain { 0 }");
    FrameStore s1{{"x", Value::integer(4)}};
    auto start = conv_head("g(x)");
    auto eager = run_machine(p, start, s1);
    auto lazy = run_lazy_machine(p, start, s1);
    EXPECT_EQ(eager.value, Value::integer(5));
    EXPECT_EQ(eager.value, lazy.value);
    EXPECT_EQ(eager.steps, lazy.steps);

    FrameStore s2{{"x", Value::integer(1)}, {"y", Value::integer(2)}};
    start = conv_head("g2(y, f(x))");
    eager = run_machine(p, start, s2);
    lazy = run_lazy_machine(p, start, s2);
    EXPECT_EQ(eager.value, Value::integer(2));
    EXPECT_EQ(eager.value, lazy.value);
}

TEST(EarlyEval, EmptyTailSticksOnBothRoutes) {
    auto p = conv_prog("main { 0 }");
    auto start = ConvTerm::tail(ConvTail{});
    ErrorCode a = ErrorCode::fuel_exhausted, b = ErrorCode::fuel_exhausted;
    try {
        run_machine(p, start, {});
    } catch (const Error& e) {
        a = e.code();
    }
    try {
        run_lazy_machine(p, start, {});
    } catch (const Error& e) {
        b = e.code();
    }
    EXPECT_EQ(a, ErrorCode::stuck);
    EXPECT_EQ(a, b);
}

TEST(EarlyEval, SamplesAgree) {
    auto r = check_early_eval(config(GenMode::convertible, 6), 100);
    EXPECT_TRUE(r.ok()) << r.to_json().dump(2);
}

TEST(Cps, FloatedExample) {
    auto p = to_convertible(float_blocks(lift_all(parse(kOriginal))));
    ASSERT_TRUE(p.ok());
    auto s = cps_sample(*p.program);
    EXPECT_EQ(s.verdict, SampleVerdict::agreed) << s.property << " " << s.details;
    EXPECT_EQ(run_machine(*p.program).value, Value::integer(1));
}

TEST(Cps, LiteralMainIsOneStep) {
    auto p = conv_prog("main { 3 }");
    auto b = bisim_check(p);
    EXPECT_TRUE(b.lockstep);
    EXPECT_EQ(b.steps, 1u);
    EXPECT_EQ(cps_sample(p).verdict, SampleVerdict::agreed);
}

TEST(Cps, SamplesAgree) {
    auto r = check_cps(config(GenMode::convertible, 6), 100);
    EXPECT_TRUE(r.ok()) << r.to_json().dump(2);
}

TEST(Roundtrip, Samples) {
    auto r = check_roundtrip(config(GenMode::general, 2), 200);
    EXPECT_TRUE(r.ok()) << r.to_json().dump(2);
}

TEST(Algebra, Samples) {
    auto r = check_algebra(3, 200);
    EXPECT_EQ(r.total, 200u);
    EXPECT_TRUE(r.ok()) << r.to_json().dump(2);
}

TEST(Shrink, AlwaysFailingGivesLiteral) {
    auto t = gen_term(config(GenMode::general, 7));
    auto s = shrink(t, [](const Term&) { return true; });
    auto* e = as<Term::E>(*s);
    ASSERT_NE(e, nullptr) << pretty_print(s);
    EXPECT_NE(as<Expr::Lit>(*e->expr), nullptr);
}

TEST(Shrink, ContainsCallGivesSkeleton) {
    auto t = parse("letrec f(a, b) = { if a < 1 then { a := 2; b } else { f(a - 1, b + 1) } } in "
                   "(letrec g(c) = { c } in g(3)); f(2, 5)");
    auto s = shrink(t, [](const Term& x) { return has_call(x); });
    auto* l = as<Term::LetRec>(*s);
    ASSERT_NE(l, nullptr) << pretty_print(s);
    EXPECT_EQ(pretty_print(s), "letrec " + l->fun + "() = { 0 } in " + l->fun + "()");
    EXPECT_TRUE(validate(*s).empty());
}

TEST(Shrink, FaultWitnessStillFails) {
    CheckOptions o;
    o.fault = Fault::swap_seq_env;
    auto failing = [&](const Term& x) { return diff_eval_sample(x, o).verdict == SampleVerdict::failed; };
    Generator g(config(GenMode::general));
    for (int i = 0; i < 200; ++i) {
        auto t = g.next_term();
        if (!failing(*t)) continue;
        auto s = shrink(t, failing);
        EXPECT_TRUE(failing(*s));
        EXPECT_LE(node_count(*s), node_count(*t));
        EXPECT_TRUE(diff_eval_sample(*s).verdict == SampleVerdict::agreed) << pretty_print(s);
        return;
    }
    FAIL() << "no failing sample";
}

TEST(Shrink, ReportCarriesShrunkTerm) {
    CheckOptions o;
    o.fault = Fault::drop_gc_at_val;
    o.shrink = true;
    auto r = diff_eval(config(GenMode::general), 50, o);
    ASSERT_FALSE(r.ok());
    for (auto& f : r.failures) {
        EXPECT_FALSE(f.shrunk.empty());
        EXPECT_LE(f.shrunk.size(), f.term.size());
    }
}
