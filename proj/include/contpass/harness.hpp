#pragma once

// Seeded program generation, the differential property checks, and greedy
// counterexample shrinking.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "contpass/ast.hpp"
#include "contpass/bigstep.hpp"
#include "contpass/cps.hpp"

namespace contpass {

/// SplitMix64 (Steele, Lea, Flood): state += 0x9e3779b97f4a7c15, then
/// z = (z ^ z>>30) * 0xbf58476d1ce4e5b9; z = (z ^ z>>27) * 0x94d049bb133111eb;
/// z ^ z>>31.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, n); n > 0. Uses the high bits of next() modulo n.
    std::uint64_t below(std::uint64_t n);
    /// Uniform in [lo, hi].
    std::int64_t range(std::int64_t lo, std::int64_t hi);
    bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

private:
    std::uint64_t state_;
};

enum class GenMode { general, liftable, convertible };

const char* mode_name(GenMode m);

struct GenConfig {
    std::uint64_t seed = 1;
    std::size_t max_depth = 4;
    std::size_t max_funs = 4;
    std::size_t max_arity = 2;
    GenMode mode = GenMode::general;
    std::int64_t int_min = -3;
    std::int64_t int_max = 9;
};

nlohmann::json to_json(const GenConfig& cfg);

/// Produces the sample sequence of a configuration. Every function takes
/// a leading counter parameter; its body returns a plain expression once
/// the counter drops below 1 and recursive calls pass the counter minus
/// one, so generated programs terminate.
class Generator {
public:
    explicit Generator(const GenConfig& cfg);

    /// Closed, validator-clean term. In convertible mode this is the
    /// un-floated form of next_program().
    TermPtr next_term();

    /// Convertible mode only.
    ConvProgram next_program();

private:
    GenConfig cfg_;
    SplitMix64 rng_;
};

/// First sample of the configuration.
TermPtr gen_term(const GenConfig& cfg);

struct Failure {
    std::size_t index = 0;
    std::string term;
    std::string property;
    std::string details;
    std::string shrunk;  // empty unless shrinking was requested
};

struct DiffReport {
    std::string suite;
    GenConfig config;
    std::size_t total = 0;
    std::size_t agreed = 0;
    std::size_t skipped_fuel = 0;
    std::vector<Failure> failures;
    /// Call sites inspected for lifted parameters (lifting suite only).
    std::size_t capture_sites = 0;
    /// Lifted parameters found in captured environments (lifting suite).
    std::size_t captured_params = 0;

    bool ok() const { return failures.empty(); }
    /// {"schema": "contpass-report/1", ...}
    nlohmann::json to_json() const;
};

struct CheckOptions {
    std::uint64_t fuel = 100000;
    Fault fault = Fault::none;  // injected into every big-step run
    bool shrink = false;
};

enum class SampleVerdict { agreed, skipped_fuel, failed };

struct SampleResult {
    SampleVerdict verdict = SampleVerdict::agreed;
    std::string property;
    std::string details;
    std::size_t capture_sites = 0;
    std::size_t captured_params = 0;
};

/// Single-sample checks behind the suites.
SampleResult diff_eval_sample(const Term& t, const CheckOptions& opts = {});
SampleResult lifting_sample(const TermPtr& t, const CheckOptions& opts = {});
SampleResult early_eval_sample(const ConvProgram& p, std::uint64_t seed, const CheckOptions& opts = {});
SampleResult cps_sample(const ConvProgram& p, const CheckOptions& opts = {});

/// Three semantics agree; intermediate and optimised end with empty stores.
DiffReport diff_eval(const GenConfig& cfg, std::size_t count, const CheckOptions& opts = {});
/// Original and lambda-lifted terms agree under naive and monitored
/// optimised evaluation; lifted environments never capture the lifted
/// parameter; the lifted naive run keeps effects frame-local.
DiffReport check_lifting(const GenConfig& cfg, std::size_t count, const CheckOptions& opts = {});
/// Substituting machine against the lazy-lookup machine, from main and
/// from every function body under random arguments.
DiffReport check_early_eval(const GenConfig& cfg, std::size_t count, const CheckOptions& opts = {});
/// Well-formed image, inverse round trip, lock-step bisimulation and
/// agreement with naive evaluation of the un-floated term.
DiffReport check_cps(const GenConfig& cfg, std::size_t count, const CheckOptions& opts = {});
/// parse(pretty_print(t)) == t.
DiffReport check_roundtrip(const GenConfig& cfg, std::size_t count);
/// Store order laws, gc and update monotonicity, gc domain law,
/// close_env idempotence, over random stores and environments.
DiffReport check_algebra(std::uint64_t seed, std::size_t count);

/// Greedy structural shrinking to a local minimum that still fails and
/// still validates (parameter shadowing allowed).
TermPtr shrink(const TermPtr& t, const std::function<bool(const Term&)>& failing);

}  // namespace contpass
