#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "contpass/bigstep.hpp"
#include "contpass/cps.hpp"
#include "contpass/harness.hpp"
#include "contpass/lifting.hpp"
#include "contpass/machines.hpp"
#include "contpass/parser.hpp"
#include "contpass/program.hpp"

using namespace contpass;

namespace {

// Signals a reported failure; the message is already printed.
struct Exit {
    int code;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot read " << path << "\n";
        throw Exit{1};
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

[[noreturn]] void report(const std::vector<Diagnostic>& diags, const std::string& path) {
    for (auto& d : diags) std::cerr << path << ":" << render(d) << "\n";
    throw Exit{1};
}

// A term or a program, as written in the file.
struct Input {
    TermPtr term;
    std::optional<Program> program;
};

Input load(const std::string& path) {
    std::string src = read_file(path);
    if (looks_like_program(src)) {
        auto r = parse_program(src);
        if (!r.ok()) report(r.diagnostics, path);
        return {nullptr, std::move(r.program)};
    }
    auto r = parse_term(src);
    if (!r.ok()) report(r.diagnostics, path);
    return {r.term, std::nullopt};
}

TermPtr load_term(const std::string& path) {
    auto in = load(path);
    TermPtr t = in.program ? unfloat(*in.program) : in.term;
    auto diags = validate(*t, ValidateOptions{in.program.has_value()});
    if (!diags.empty()) report(diags, path);
    return t;
}

// Programs are used as written; terms are lambda-lifted and floated first.
Program load_program(const std::string& path) {
    auto in = load(path);
    if (in.program) return *in.program;
    auto diags = validate(*in.term);
    if (!diags.empty()) report(diags, path);
    return float_blocks(lift_all(in.term));
}

ConvProgram load_convertible(const std::string& path) {
    auto r = to_convertible(load_program(path));
    if (!r.ok()) report(r.diagnostics, path);
    return *r.program;
}

const std::map<std::string, Semantics> kSemantics{
    {"naive", Semantics::naive}, {"intermediate", Semantics::intermediate}, {"optimised", Semantics::optimised}};
const std::map<std::string, GenMode> kModes{
    {"general", GenMode::general}, {"liftable", GenMode::liftable}, {"convertible", GenMode::convertible}};
const std::map<std::string, Fault> kFaults{
    {"none", Fault::none}, {"drop-gc-at-val", Fault::drop_gc_at_val}, {"swap-seq-env", Fault::swap_seq_env}};

template <class Map>
std::vector<std::string> keys(const Map& m) {
    std::vector<std::string> out;
    for (auto& [k, _] : m) out.push_back(k);
    return out;
}

std::ostream* open_trace(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return &std::cout;
    file.open(path);
    if (!file) {
        std::cerr << "error: cannot write " << path << "\n";
        throw Exit{1};
    }
    return &file;
}

void print_report(const LiftReport& r) {
    std::cout << "parameter " << r.target.param << " of " << r.target.owner << ": "
              << (r.liftable ? "liftable" : "not liftable") << "\n";
    for (auto& v : r.violations)
        std::cout << "  " << render(Diagnostic{v.span, Severity::error, "NOT_LIFTABLE", v.call + ": " + v.reason})
                  << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contpass: semantics, lambda-lifting and CPS conversion laboratory"};
    app.require_subcommand(1);

    std::string file;
    auto add_file = [&](CLI::App* cmd) { cmd->add_option("FILE", file, "term or program file")->required()->check(CLI::ExistingFile); };

    auto* parse_cmd = app.add_subcommand("parse", "parse, validate and pretty-print");
    add_file(parse_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "big-step evaluation");
    add_file(eval_cmd);
    std::string semantics = "naive";
    std::uint64_t fuel = 100000;
    std::string trace_path;
    eval_cmd->add_option("--semantics", semantics)->check(CLI::IsMember(keys(kSemantics)));
    eval_cmd->add_option("--fuel", fuel);
    auto* eval_trace = eval_cmd->add_option("--trace", trace_path, "JSON lines of rule applications (stdout if no path)")
                           ->expected(0, 1);

    auto* lift_cmd = app.add_subcommand("lift", "lambda-lift every function");
    add_file(lift_cmd);

    auto* check_cmd = app.add_subcommand("check-liftable", "check one parameter for liftability");
    add_file(check_cmd);
    std::string param, owner;
    check_cmd->add_option("--param", param)->required();
    check_cmd->add_option("--owner", owner)->required();

    auto* float_cmd = app.add_subcommand("float", "hoist closed functions to the top level");
    add_file(float_cmd);

    auto* to_cps_cmd = app.add_subcommand("to-cps", "convert to push/invoke form");
    add_file(to_cps_cmd);

    auto* from_cps_cmd = app.add_subcommand("from-cps", "convert push/invoke form back");
    add_file(from_cps_cmd);

    auto* run_cmd = app.add_subcommand("run-machine", "run a small-step machine");
    add_file(run_cmd);
    std::string machine = "convertible";
    run_cmd->add_option("--machine", machine)->check(CLI::IsMember({"convertible", "cps"}));
    run_cmd->add_option("--fuel", fuel);
    auto* run_trace = run_cmd->add_option("--trace", trace_path, "JSON lines of machine states")->expected(0, 1);

    auto* bisim_cmd = app.add_subcommand("bisim", "run both machines in lock step");
    add_file(bisim_cmd);
    bool json = false;
    bisim_cmd->add_option("--fuel", fuel);
    bisim_cmd->add_flag("--json", json);

    auto* fuzz_cmd = app.add_subcommand("fuzz", "generate samples and check properties");
    std::string mode = "general", suite, fault = "none";
    GenConfig cfg;
    std::size_t count = 100;
    bool do_shrink = false;
    fuzz_cmd->add_option("--mode", mode)->check(CLI::IsMember(keys(kModes)));
    fuzz_cmd->add_option("--suite", suite, "default: diff-eval, lifting or cps by mode")
        ->check(CLI::IsMember({"diff-eval", "lifting", "early-eval", "cps", "roundtrip", "algebra"}));
    fuzz_cmd->add_option("--seed", cfg.seed);
    fuzz_cmd->add_option("--count", count);
    fuzz_cmd->add_option("--fuel", fuel);
    fuzz_cmd->add_option("--max-depth", cfg.max_depth)->check(CLI::PositiveNumber);
    fuzz_cmd->add_option("--max-funs", cfg.max_funs);
    fuzz_cmd->add_option("--max-arity", cfg.max_arity);
    fuzz_cmd->add_option("--fault", fault)->check(CLI::IsMember(keys(kFaults)));
    fuzz_cmd->add_flag("--shrink", do_shrink);
    fuzz_cmd->add_flag("--json", json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (parse_cmd->parsed()) {
            auto in = load(file);
            if (in.program) {
                auto diags = validate_program(*in.program);
                std::cout << print_program(*in.program);
                if (!diags.empty()) report(diags, file);
            } else {
                auto diags = validate(*in.term);
                std::cout << pretty_print(*in.term) << "\n";
                if (!diags.empty()) report(diags, file);
            }
        } else if (eval_cmd->parsed()) {
            TermPtr t = load_term(file);
            EvalOptions opts;
            opts.fuel = fuel;
            std::ofstream tf;
            if (eval_trace->count() > 0) {
                std::ostream* os = open_trace(trace_path, tf);
                opts.trace = [os](const TraceEvent& e) {
                    *os << nlohmann::json{{"step", e.step}, {"rule", e.rule}, {"store_size", e.store_size},
                                          {"env_depth", e.env_depth}}
                               .dump()
                        << "\n";
                };
            }
            auto out = evaluate(*t, kSemantics.at(semantics), opts);
            std::cout << "value: " << out.value.to_string() << "\n"
                      << "store: " << to_string(out.final_store) << "\n"
                      << "steps: " << out.stats.steps << "\n";
        } else if (lift_cmd->parsed()) {
            auto in = load(file);
            if (in.program) {
                std::cerr << "error: lift expects a term\n";
                return 1;
            }
            auto diags = validate(*in.term);
            if (!diags.empty()) report(diags, file);
            std::cout << pretty_print(*lift_all(in.term)) << "\n";
        } else if (check_cmd->parsed()) {
            TermPtr t = load_term(file);
            auto r = check_liftable(*t, make_target(*t, param, owner));
            print_report(r);
            return r.liftable ? 0 : 1;
        } else if (float_cmd->parsed()) {
            auto in = load(file);
            if (in.program) {
                std::cout << print_program(*in.program);
            } else {
                auto diags = validate(*in.term, ValidateOptions{true});
                if (!diags.empty()) report(diags, file);
                std::cout << print_program(float_blocks(in.term));
            }
        } else if (to_cps_cmd->parsed()) {
            std::cout << print_program(cps_convert(load_convertible(file)));
        } else if (from_cps_cmd->parsed()) {
            auto r = parse_cps_program(read_file(file));
            if (!r.ok()) report(r.diagnostics, file);
            std::cout << print_program(cps_invert(*r.program));
        } else if (run_cmd->parsed()) {
            MachineOptions opts;
            opts.fuel = fuel;
            std::ofstream tf;
            if (run_trace->count() > 0) {
                std::ostream* os = open_trace(trace_path, tf);
                opts.trace = [os](const MachineEvent& e) {
                    *os << nlohmann::json{{"step", e.step}, {"rule", e.rule}, {"state", e.state}}.dump() << "\n";
                };
            }
            MachineResult out;
            if (machine == "cps") {
                std::string src = read_file(file);
                auto direct = parse_cps_program(src);
                CpsProgram p = direct.ok() ? *direct.program : cps_convert(load_convertible(file));
                out = run_machine(p, opts);
            } else {
                out = run_machine(load_convertible(file), opts);
            }
            std::cout << "value: " << out.value.to_string() << "\n"
                      << "steps: " << out.steps << "\n";
        } else if (bisim_cmd->parsed()) {
            auto r = bisim_check(load_convertible(file), fuel);
            if (json) {
                nlohmann::json j{{"schema", "contpass-report/1"}, {"lockstep", r.lockstep}, {"steps", r.steps}};
                j["divergence_step"] = r.divergence_step ? nlohmann::json(*r.divergence_step) : nlohmann::json();
                j["value"] = r.value ? to_json(*r.value) : nlohmann::json();
                j["error"] = r.error ? nlohmann::json(code_name(*r.error)) : nlohmann::json();
                if (!r.reason.empty()) j["reason"] = r.reason;
                std::cout << j.dump() << "\n";
            } else {
                std::cout << "lockstep: " << (r.lockstep ? "yes" : "no") << "\n"
                          << "steps: " << r.steps << "\n";
                if (r.value) std::cout << "value: " << r.value->to_string() << "\n";
                if (r.error) std::cout << "error: " << code_name(*r.error) << "\n";
                if (!r.lockstep)
                    std::cout << "diverged at step " << r.divergence_step.value_or(0) << ": " << r.reason << "\n";
            }
            return r.lockstep ? 0 : 1;
        } else if (fuzz_cmd->parsed()) {
            cfg.mode = kModes.at(mode);
            if (suite.empty())
                suite = cfg.mode == GenMode::general ? "diff-eval" : cfg.mode == GenMode::liftable ? "lifting" : "cps";
            bool needs_convertible = suite == "early-eval" || suite == "cps";
            if (needs_convertible != (cfg.mode == GenMode::convertible) && suite != "algebra" &&
                suite != "roundtrip" && suite != "diff-eval") {
                std::cerr << "error: suite " << suite << " needs --mode "
                          << (needs_convertible ? "convertible" : "liftable") << "\n";
                return 2;
            }
            if (needs_convertible && cfg.mode != GenMode::convertible) {
                std::cerr << "error: suite " << suite << " needs --mode convertible\n";
                return 2;
            }
            CheckOptions opts;
            opts.fuel = fuel;
            opts.fault = kFaults.at(fault);
            opts.shrink = do_shrink;
            DiffReport r;
            if (suite == "diff-eval") r = diff_eval(cfg, count, opts);
            else if (suite == "lifting") r = check_lifting(cfg, count, opts);
            else if (suite == "early-eval") r = check_early_eval(cfg, count, opts);
            else if (suite == "cps") r = check_cps(cfg, count, opts);
            else if (suite == "roundtrip") r = check_roundtrip(cfg, count);
            else r = check_algebra(cfg.seed, count);
            if (json) {
                std::cout << r.to_json().dump(2) << "\n";
            } else {
                std::cout << r.suite << ": total " << r.total << ", agreed " << r.agreed << ", skipped (fuel) "
                          << r.skipped_fuel << ", failures " << r.failures.size() << "\n";
                if (r.suite == "lifting")
                    std::cout << "lifted-parameter occurrences: " << r.captured_params << " over "
                              << r.capture_sites << " call-site checks\n";
                for (auto& f : r.failures) {
                    std::cout << "#" << f.index << " " << f.property << ": " << f.details << "\n  " << f.term << "\n";
                    if (!f.shrunk.empty()) std::cout << "  shrunk: " << f.shrunk << "\n";
                }
            }
            return r.ok() ? 0 : 1;
        }
    } catch (const Exit& e) {
        return e.code;
    } catch (const NotLiftable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
