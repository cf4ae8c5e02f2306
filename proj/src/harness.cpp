#include "contpass/harness.hpp"

#include <sstream>

#include "contpass/lifting.hpp"
#include "contpass/machines.hpp"
#include "contpass/parser.hpp"

namespace contpass {

nlohmann::json DiffReport::to_json() const {
    nlohmann::json fs = nlohmann::json::array();
    for (auto& f : failures) {
        nlohmann::json j{{"index", f.index}, {"property", f.property}, {"term", f.term}, {"details", f.details}};
        if (!f.shrunk.empty()) j["shrunk"] = f.shrunk;
        fs.push_back(std::move(j));
    }
    nlohmann::json out{{"schema", "contpass-report/1"},
                       {"suite", suite},
                       {"config", contpass::to_json(config)},
                       {"total", total},
                       {"agreed", agreed},
                       {"skipped_fuel", skipped_fuel},
                       {"failures", fs}};
    if (suite == "lifting") out["captures"] = {{"call_sites", capture_sites}, {"occurrences", captured_params}};
    return out;
}

namespace {

SampleResult fail(std::string property, std::string details) {
    return {SampleVerdict::failed, std::move(property), std::move(details)};
}

DiffReport report(const char* suite, const GenConfig& cfg) {
    DiffReport r;
    r.suite = suite;
    r.config = cfg;
    return r;
}

SampleResult skipped() { return {SampleVerdict::skipped_fuel, {}, {}}; }

bool is_fuel(const Error& e) { return e.code() == ErrorCode::fuel_exhausted; }

std::string show(const Value& v) { return v.to_string(); }

void tally(DiffReport& r, std::size_t index, const std::string& text, SampleResult s,
           const std::function<std::string()>& shrunk = nullptr) {
    ++r.total;
    r.capture_sites += s.capture_sites;
    r.captured_params += s.captured_params;
    switch (s.verdict) {
        case SampleVerdict::agreed: ++r.agreed; break;
        case SampleVerdict::skipped_fuel: ++r.skipped_fuel; break;
        case SampleVerdict::failed:
            r.failures.push_back({index, text, s.property, s.details, shrunk ? shrunk() : std::string{}});
            break;
    }
}

// Shrinks a term-level failure, keeping the same failing property.
template <class Check>
std::function<std::string()> shrinker(const CheckOptions& opts, const TermPtr& t, Check check,
                                      const std::string& property) {
    if (!opts.shrink) return nullptr;
    return [=] {
        auto small = shrink(t, [&](const Term& u) {
            auto r = check(std::make_shared<const Term>(u));
            return r.verdict == SampleVerdict::failed && r.property == property;
        });
        return pretty_print(*small);
    };
}

}  // namespace

// ---------------------------------------------------------------------------
// single samples

SampleResult diff_eval_sample(const Term& t, const CheckOptions& opts) {
    EvalOptions eo;
    eo.fuel = opts.fuel;
    eo.fault = opts.fault;
    std::vector<EvalOutcome> out;
    bool fuel = false;
    for (auto sem : {Semantics::naive, Semantics::intermediate, Semantics::optimised}) {
        try {
            out.push_back(evaluate(t, sem, eo));
        } catch (const Error& e) {
            if (!is_fuel(e)) return fail(std::string(semantics_name(sem)) + "-error", e.what());
            fuel = true;
        }
    }
    if (fuel) return skipped();
    if (!(out[0].value == out[1].value) || !(out[0].value == out[2].value))
        return fail("value-agreement", "naive " + show(out[0].value) + ", intermediate " +
                                           show(out[1].value) + ", optimised " + show(out[2].value));
    if (!out[1].final_store.empty())
        return fail("intermediate-store-empty", to_string(out[1].final_store));
    if (!out[2].final_store.empty())
        return fail("optimised-store-empty", to_string(out[2].final_store));
    return {};
}

SampleResult lifting_sample(const TermPtr& t, const CheckOptions& opts) {
    TermPtr lifted;
    try {
        lifted = lift_all(t);
    } catch (const Error& e) {
        return fail("lift", e.what());
    }
    EvalOptions naive;
    naive.fuel = opts.fuel;
    naive.fault = opts.fault;
    EvalOptions naive_lifted = naive;
    naive_lifted.monitors.frame_locality = true;

    EvalOptions monitored = naive;
    monitored.monitors.aliasing = true;
    monitored.monitors.compact = true;
    monitored.monitors.freshness = true;

    SampleResult r;
    std::vector<EnvLifter> lifters;
    for (auto& target : lift_candidates(*t)) lifters.emplace_back(target);
    EvalOptions monitored_orig = monitored;
    monitored_orig.on_call = [&](const CallSite& site) {
        for (auto& l : lifters) {
            ++r.capture_sites;
            r.captured_params += l.param_occurrences(site.funs);
        }
    };

    struct Run {
        const char* name;
        const Term* term;
        Semantics sem;
        const EvalOptions* opts;
    };
    Run runs[] = {{"naive", t.get(), Semantics::naive, &naive},
                  {"naive-lifted", lifted.get(), Semantics::naive, &naive_lifted},
                  {"optimised", t.get(), Semantics::optimised, &monitored_orig},
                  {"optimised-lifted", lifted.get(), Semantics::optimised, &monitored}};
    std::vector<EvalOutcome> out;
    bool fuel = false;
    for (auto& run : runs) {
        try {
            out.push_back(evaluate(*run.term, run.sem, *run.opts));
        } catch (const Error& e) {
            if (!is_fuel(e)) {
                auto f = fail(e.code() == ErrorCode::monitor_violation ? std::string("monitor")
                                                                         : std::string(run.name) + "-error",
                              std::string(run.name) + ": " + e.what());
                f.capture_sites = r.capture_sites;
                f.captured_params = r.captured_params;
                return f;
            }
            fuel = true;
        }
    }
    if (fuel) {
        auto s = skipped();
        s.capture_sites = r.capture_sites;
        s.captured_params = r.captured_params;
        return s;
    }
    auto keep = [&](SampleResult f) {
        f.capture_sites = r.capture_sites;
        f.captured_params = r.captured_params;
        return f;
    };
    if (!(out[0].value == out[1].value))
        return keep(fail("naive-lifting", "original " + show(out[0].value) + ", lifted " + show(out[1].value)));
    if (!(out[2].value == out[3].value))
        return keep(
            fail("optimised-lifting", "original " + show(out[2].value) + ", lifted " + show(out[3].value)));
    if (!out[2].final_store.empty() || !out[3].final_store.empty())
        return keep(fail("optimised-store-empty",
                         to_string(out[2].final_store) + " / " + to_string(out[3].final_store)));
    if (r.captured_params > 0)
        return keep(fail("lifted-param-captured", std::to_string(r.captured_params) +
                                            " captured environments hold a lifted parameter"));
    return r;
}

SampleResult early_eval_sample(const ConvProgram& p, std::uint64_t seed, const CheckOptions& opts) {
    MachineOptions mo;
    mo.fuel = opts.fuel;
    auto compare = [&](const std::string& where, const ConvTermPtr& start,
                       const FrameStore& sigma) -> std::optional<SampleResult> {
        MachineResult a, b;
        std::optional<Error> ea, eb;
        try {
            a = run_machine(p, start, sigma, mo);
        } catch (const Error& e) {
            ea = e;
        }
        try {
            b = run_lazy_machine(p, start, sigma, mo);
        } catch (const Error& e) {
            eb = e;
        }
        if (ea && eb && is_fuel(*ea) && is_fuel(*eb)) return skipped();
        if (ea || eb)
            return fail("early-eval", where + ": " + (ea ? std::string(ea->what()) : "ok") + " / " +
                                          (eb ? std::string(eb->what()) : "ok"));
        if (!(a.value == b.value) || a.steps != b.steps)
            return fail("early-eval", where + ": substituted " + show(a.value) + " in " +
                                          std::to_string(a.steps) + " steps, lazy " + show(b.value) + " in " +
                                          std::to_string(b.steps) + " steps");
        return std::nullopt;
    };
    if (auto r = compare("main", p.main, {})) return *r;
    SplitMix64 rng(seed);
    for (auto& f : p.functions) {
        FrameStore sigma;
        for (std::size_t i = 0; i < f.params.size(); ++i)
            sigma[f.params[i]] = Value::integer(i == 0 ? rng.range(0, 2) : rng.range(-3, 9));
        if (auto r = compare(f.name, f.body, sigma); r && r->verdict == SampleVerdict::failed) return *r;
    }
    return {};
}

SampleResult cps_sample(const ConvProgram& p, const CheckOptions& opts) {
    CpsProgram c = cps_convert(p);
    if (!is_well_formed(c)) return fail("well-formed", print_program(c));
    try {
        if (!(cps_invert(c) == p)) return fail("inverse", print_program(cps_invert(c)));
    } catch (const Error& e) {
        return fail("inverse", e.what());
    }
    auto b = bisim_check(p, opts.fuel);
    if (!b.lockstep)
        return fail("lockstep", "step " + std::to_string(b.divergence_step.value_or(0)) + ": " + b.reason);
    if (b.error) {
        if (*b.error == ErrorCode::fuel_exhausted) return skipped();
        return fail("machine-error", code_name(*b.error));
    }
    MachineOptions mo;
    mo.fuel = opts.fuel;
    try {
        auto conv = run_machine(p, mo);
        auto cps = run_machine(c, mo);
        if (conv.steps != cps.steps || conv.steps != b.steps || !(conv.value == cps.value))
            return fail("step-count", std::to_string(conv.steps) + " / " + std::to_string(cps.steps) + " / " +
                                          std::to_string(b.steps));
    } catch (const Error& e) {
        return fail("machine-error", e.what());
    }
    EvalOptions eo;
    eo.fuel = opts.fuel;
    eo.fault = opts.fault;
    try {
        auto naive = eval_naive(*unfloat(p), eo);
        if (!(naive.value == *b.value))
            return fail("machine-vs-naive", "machine " + show(*b.value) + ", naive " + show(naive.value));
    } catch (const Error& e) {
        if (is_fuel(e)) return skipped();
        return fail("naive-error", e.what());
    }
    return {};
}

// ---------------------------------------------------------------------------
// suites

DiffReport diff_eval(const GenConfig& cfg, std::size_t count, const CheckOptions& opts) {
    DiffReport r = report("diff-eval", cfg);
    Generator gen(cfg);
    for (std::size_t i = 0; i < count; ++i) {
        auto t = gen.next_term();
        auto s = diff_eval_sample(*t, opts);
        auto check = [opts](const TermPtr& u) { return diff_eval_sample(*u, opts); };
        tally(r, i, pretty_print(*t), s, shrinker(opts, t, check, s.property));
    }
    return r;
}

DiffReport check_lifting(const GenConfig& cfg, std::size_t count, const CheckOptions& opts) {
    DiffReport r = report("lifting", cfg);
    Generator gen(cfg);
    for (std::size_t i = 0; i < count; ++i) {
        auto t = gen.next_term();
        auto s = lifting_sample(t, opts);
        auto check = [opts](const TermPtr& u) { return lifting_sample(u, opts); };
        tally(r, i, pretty_print(*t), s, shrinker(opts, t, check, s.property));
    }
    return r;
}

DiffReport check_early_eval(const GenConfig& cfg, std::size_t count, const CheckOptions& opts) {
    DiffReport r = report("early-eval", cfg);
    Generator gen(cfg);
    for (std::size_t i = 0; i < count; ++i) {
        auto p = gen.next_program();
        tally(r, i, print_program(p), early_eval_sample(p, cfg.seed ^ (i + 1), opts));
    }
    return r;
}

DiffReport check_cps(const GenConfig& cfg, std::size_t count, const CheckOptions& opts) {
    DiffReport r = report("cps", cfg);
    Generator gen(cfg);
    for (std::size_t i = 0; i < count; ++i) {
        auto p = gen.next_program();
        tally(r, i, print_program(p), cps_sample(p, opts));
    }
    return r;
}

DiffReport check_roundtrip(const GenConfig& cfg, std::size_t count) {
    DiffReport r = report("roundtrip", cfg);
    Generator gen(cfg);
    for (std::size_t i = 0; i < count; ++i) {
        auto t = gen.next_term();
        std::string text = pretty_print(*t);
        auto back = parse_term(text);
        SampleResult s;
        if (!back.ok())
            s = fail("parse", render(back.diagnostics[0]));
        else if (!same(back.term, t))
            s = fail("roundtrip", pretty_print(*back.term));
        tally(r, i, text, s);
    }
    return r;
}

// ---------------------------------------------------------------------------
// algebraic laws

namespace {

class AlgebraGen {
public:
    explicit AlgebraGen(std::uint64_t seed) : rng_(seed) {}

    Store store(std::size_t max_size = 6) {
        Store s;
        std::size_t n = rng_.below(max_size + 1);
        for (std::size_t i = 0; i < n; ++i) s[loc()] = value();
        return s;
    }

    Store extend(Store s) {
        std::size_t n = rng_.below(4);
        for (std::size_t i = 0; i < n; ++i) {
            Location l = loc();
            if (!s.count(l)) s[l] = value();
        }
        return s;
    }

    VarEnv env() {
        static const char* names[] = {"a", "b", "c", "d"};
        VarEnv e;
        std::size_t n = rng_.below(5);
        for (std::size_t i = 0; i < n; ++i) e.bind(names[rng_.below(4)], loc());
        return e;
    }

    FunEnv funs(int depth) {
        static const char* names[] = {"f", "g", "h"};
        static const char* params[] = {"a", "b", "c"};
        FunEnv out;
        std::size_t n = rng_.below(depth > 0 ? 3 : 2);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = std::make_shared<Closure>();
            for (auto* p : params)
                if (rng_.chance(1, 2)) c->params.push_back(p);
            c->body = mk::int_term(static_cast<std::int64_t>(rng_.below(5)));
            c->captured_vars = env();
            if (depth > 0) c->captured_funs = funs(depth - 1);
            out[names[rng_.below(3)]] = c;
        }
        return out;
    }

    Location loc() { return 1 + rng_.below(10); }
    Value value() { return Value::integer(rng_.range(-3, 3)); }

private:
    SplitMix64 rng_;
};

bool same_funs(const FunEnv& a, const FunEnv& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        auto& x = *ia->second;
        auto& y = *ib->second;
        if (x.params != y.params || !same(x.body, y.body) || !(x.captured_vars == y.captured_vars) ||
            !same_funs(x.captured_funs, y.captured_funs))
            return false;
    }
    return true;
}

}  // namespace

DiffReport check_algebra(std::uint64_t seed, std::size_t count) {
    GenConfig cfg;
    cfg.seed = seed;
    DiffReport r = report("algebra", cfg);
    AlgebraGen g(seed);
    for (std::size_t i = 0; i < count; ++i) {
        Store s = g.store();
        Store t = g.extend(s);
        Store u = g.extend(t);
        Store other = g.store();
        VarEnv rho = g.env();
        Location l = g.loc();
        Value v = g.value();
        FunEnv funs = g.funs(2);

        std::vector<std::string> broken;
        auto law = [&](const char* name, bool holds) {
            if (!holds) broken.push_back(name);
        };
        law("leq-reflexive", store_leq(s, s) && store_leq(other, other));
        law("leq-extension", store_leq(s, t) && store_leq(t, u));
        law("leq-transitive", store_leq(s, u));
        law("leq-transitive-random",
            !(store_leq(s, other) && store_leq(other, u)) || store_leq(s, u));
        law("leq-antisymmetric", !(store_leq(s, other) && store_leq(other, s)) || s == other);
        law("leq-antisymmetric-extension", !store_leq(t, s) || s == t);
        law("gc-monotone", store_leq(gc_clean(rho, s), gc_clean(rho, t)));
        Store s2 = s, t2 = t;
        s2[l] = v;
        t2[l] = v;
        law("update-monotone", store_leq(s2, t2));
        Store cleaned = gc_clean(rho, s);
        LocationSet img = rho.image();
        bool domain = store_leq(cleaned, s);
        for (auto& [loc, _] : s) domain = domain && (cleaned.count(loc) == (img.count(loc) ? 0u : 1u));
        law("gc-domain", domain);
        FunEnv once = close_env(funs);
        law("close-env-idempotent", same_funs(close_env(once), once));
        law("close-env-compact", is_compact(once));

        SampleResult sr;
        if (!broken.empty()) {
            std::ostringstream os;
            for (std::size_t k = 0; k < broken.size(); ++k) os << (k ? ", " : "") << broken[k];
            sr = fail("algebra", os.str());
        }
        tally(r, i, "s=" + to_string(s) + " t=" + to_string(t) + " u=" + to_string(u), sr);
    }
    return r;
}

}  // namespace contpass
