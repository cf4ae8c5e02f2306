#include <string>
#include <vector>

#include "contpass/harness.hpp"

namespace contpass {

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t SplitMix64::below(std::uint64_t n) { return (next() >> 11) % n; }

std::int64_t SplitMix64::range(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(below(span));
}

const char* mode_name(GenMode m) {
    switch (m) {
        case GenMode::general: return "general";
        case GenMode::liftable: return "liftable";
        case GenMode::convertible: return "convertible";
    }
    return "?";
}

nlohmann::json to_json(const GenConfig& cfg) {
    return {{"seed", cfg.seed},         {"max_depth", cfg.max_depth}, {"max_funs", cfg.max_funs},
            {"max_arity", cfg.max_arity}, {"mode", mode_name(cfg.mode)},
            {"int_range", {cfg.int_min, cfg.int_max}}};
}

namespace {

struct VarInfo {
    std::string name;
    bool assignable;
};

struct FunInfo {
    std::string name;
    std::size_t arity;    // including the counter
    std::string counter;
    bool ancestor;        // we are inside its body
    bool top_level;       // not defined inside any function body
};

struct Scope {
    std::vector<VarInfo> vars;
    std::vector<FunInfo> funs;
    int level = 0;
};

template <class T>
const T& pick(SplitMix64& rng, const std::vector<T>& xs) {
    return xs[rng.below(xs.size())];
}

class Exprs {
public:
    Exprs(const GenConfig& cfg, SplitMix64& rng) : cfg_(cfg), rng_(rng) {}

    ExprPtr expr(const std::vector<std::string>& vars, std::size_t depth) {
        if (depth == 0 || rng_.chance(1, 2)) {
            if (!vars.empty() && rng_.chance(1, 2)) return mk::var(pick(rng_, vars));
            return mk::int_(rng_.range(cfg_.int_min, cfg_.int_max));
        }
        auto op = rng_.chance(1, 2) ? BinOpKind::add : BinOpKind::sub;
        auto l = expr(vars, depth - 1);
        return mk::binop(op, l, expr(vars, depth - 1));
    }

    ExprPtr cond(const std::vector<std::string>& vars) {
        if (rng_.chance(1, 6)) return mk::bool_(rng_.chance(1, 2));
        auto op = rng_.chance(2, 3) ? BinOpKind::lt : BinOpKind::eq;
        auto l = expr(vars, 1);
        return mk::binop(op, l, expr(vars, 1));
    }

    ExprPtr counter_arg(const std::string& counter, bool ancestor) {
        if (ancestor) return mk::binop(BinOpKind::sub, mk::var(counter), mk::int_(1));
        return mk::int_(rng_.range(0, 2));
    }

    ExprPtr guard(const std::string& counter) {
        return mk::binop(BinOpKind::lt, mk::var(counter), mk::int_(1));
    }

protected:
    const GenConfig& cfg_;
    SplitMix64& rng_;
};

// General and liftable terms.
class TermGen : Exprs {
public:
    TermGen(const GenConfig& cfg, SplitMix64& rng)
        : Exprs(cfg, rng), funs_left_(cfg.max_funs) {}

    TermPtr root() {
        Scope s;
        return term(s, cfg_.max_depth, true);
    }

private:
    std::vector<std::string> names(const Scope& s) const {
        std::vector<std::string> out;
        for (auto& v : s.vars) out.push_back(v.name);
        return out;
    }

    std::vector<std::string> assignable(const Scope& s) const {
        std::vector<std::string> out;
        for (auto& v : s.vars)
            if (v.assignable) out.push_back(v.name);
        return out;
    }

    std::vector<FunInfo> callable(const Scope& s, bool tail) const {
        std::vector<FunInfo> out;
        for (auto& f : s.funs)
            if (cfg_.mode != GenMode::liftable || tail || f.top_level) out.push_back(f);
        return out;
    }

    TermPtr leaf(const Scope& s) { return mk::e(expr(names(s), 1)); }

    TermPtr term(const Scope& s, std::size_t depth, bool tail) {
        enum Kind { kExpr, kSeq, kAssign, kIf, kLetrec, kCall };
        std::vector<std::pair<Kind, int>> options{{kExpr, 2}};
        auto calls = callable(s, tail);
        auto targets = assignable(s);
        if (depth > 0) {
            options.push_back({kSeq, 2});
            options.push_back({kIf, 2});
            if (!targets.empty()) options.push_back({kAssign, 2});
            if (funs_left_ > 0) options.push_back({kLetrec, 3});
            if (!calls.empty()) options.push_back({kCall, 4});
        }
        int total = 0;
        for (auto& o : options) total += o.second;
        auto roll = static_cast<int>(rng_.below(static_cast<std::uint64_t>(total)));
        Kind kind = kExpr;
        for (auto& o : options) {
            if (roll < o.second) {
                kind = o.first;
                break;
            }
            roll -= o.second;
        }
        switch (kind) {
            case kExpr:
                return mk::e(expr(names(s), 2));
            case kSeq: {
                auto first = term(s, depth - 1, false);
                return mk::seq(first, term(s, depth - 1, tail));
            }
            case kAssign: {
                std::string x = pick(rng_, targets);
                auto rhs = term(s, depth - 1, false);
                return mk::seq(mk::assign(x, rhs), term(s, depth - 1, tail));
            }
            case kIf: {
                TermPtr c = mk::e(cond(names(s)));
                if (cfg_.mode == GenMode::general && rng_.chance(1, 5))
                    c = mk::seq(term(s, depth - 1, false), c);
                auto a = term(s, depth - 1, tail);
                return mk::ite(c, a, term(s, depth - 1, tail));
            }
            case kLetrec:
                return letrec(s, depth, tail);
            case kCall:
                return call(s, pick(rng_, calls), depth);
        }
        return leaf(s);
    }

    TermPtr letrec(const Scope& s, std::size_t depth, bool tail) {
        --funs_left_;
        std::string id = std::to_string(++fun_count_);
        FunInfo f{"f" + id, 1 + rng_.below(cfg_.max_arity + 1), "c" + id, true, s.level == 0};
        std::vector<std::string> params{f.counter};
        for (std::size_t i = 1; i < f.arity; ++i) params.push_back("x" + id + "_" + std::to_string(i));

        Scope inner = s;
        inner.level = s.level + 1;
        inner.vars.push_back({f.counter, false});
        for (std::size_t i = 1; i < params.size(); ++i) inner.vars.push_back({params[i], true});
        inner.funs.push_back(f);
        auto base = mk::e(expr(names(inner), 1));
        auto body = mk::ite(mk::e(guard(f.counter)), base, term(inner, depth - 1, true));

        Scope after = s;
        f.ancestor = false;
        after.funs.push_back(f);
        TermPtr cont;
        if (depth > 1 && (cfg_.mode != GenMode::liftable || tail || f.top_level) && rng_.chance(2, 3)) {
            cont = call(after, f, depth - 1);
            if (rng_.chance(1, 2)) cont = mk::seq(term(after, depth - 1, false), cont);
        } else {
            cont = term(after, depth - 1, tail);
        }
        return mk::letrec(f.name, params, body, cont);
    }

    TermPtr call(const Scope& s, const FunInfo& f, std::size_t depth) {
        std::vector<TermPtr> args{mk::e(counter_arg(f.counter, f.ancestor))};
        for (std::size_t i = 1; i < f.arity; ++i)
            args.push_back(depth > 0 ? term(s, depth - 1, false) : leaf(s));
        return mk::call(f.name, std::move(args));
    }

    std::size_t funs_left_;
    std::size_t fun_count_ = 0;
};

// Convertible programs, built directly in the head/tail grammar.
class ProgramGen : Exprs {
public:
    using Exprs::Exprs;

    ConvProgram program() {
        std::size_t n = 1 + rng_.below(std::max<std::size_t>(cfg_.max_funs, 1));
        for (std::size_t i = 0; i < n; ++i) {
            std::string id = std::to_string(i + 1);
            std::vector<std::string> params{"c" + id};
            std::size_t extra = rng_.below(cfg_.max_arity + 1);
            for (std::size_t j = 0; j < extra; ++j) params.push_back("x" + id + "_" + std::to_string(j + 1));
            prog_.functions.push_back({"f" + id, params, nullptr});
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& f = prog_.functions[i];
            auto base = ConvTerm::leaf(expr(f.params, 1));
            f.body = ConvTerm::cond(guard(f.params[0]), base, head(i, f.params, cfg_.max_depth));
        }
        prog_.main = head(n, {}, cfg_.max_depth);
        return std::move(prog_);
    }

private:
    // caller == functions.size() for main
    ConvTermPtr head(std::size_t caller, const std::vector<std::string>& vars, std::size_t depth) {
        std::vector<std::string> targets(vars.begin() + (vars.empty() ? 0 : 1), vars.end());
        std::uint64_t roll = rng_.below(8);
        if (depth > 0 && roll < 2 && !targets.empty()) {
            std::string x = pick(rng_, targets);
            auto rhs = expr(vars, 2);
            return ConvTerm::assign(x, rhs, head(caller, vars, depth - 1));
        }
        if (depth > 0 && roll < 4) {
            auto c = cond(vars);
            auto a = head(caller, vars, depth - 1);
            return ConvTerm::cond(c, a, head(caller, vars, depth - 1));
        }
        if (roll < 5) return ConvTerm::leaf(expr(vars, 2));
        ConvTail q;
        std::size_t m = 1 + rng_.below(3);
        for (std::size_t k = 0; k < m; ++k) q.calls.push_back(nested(caller, vars, 2));
        return ConvTerm::tail(std::move(q));
    }

    NestedCall nested(std::size_t caller, const std::vector<std::string>& vars, std::size_t nest) {
        bool in_fun = caller < prog_.functions.size();
        std::size_t j = rng_.below(in_fun ? caller + 1 : caller);
        auto& g = prog_.functions[j];
        NestedCall out{g.name, {counter_arg(vars.empty() ? "" : vars[0], in_fun && j == caller)}, nullptr};
        std::size_t extra = g.params.size() - 1;
        bool nest_last = extra > 0 && nest > 0 && rng_.chance(1, 3);
        for (std::size_t k = 0; k + (nest_last ? 1 : 0) < extra; ++k) out.args.push_back(expr(vars, 1));
        if (nest_last) out.nested = std::make_shared<const NestedCall>(nested(caller, vars, nest - 1));
        return out;
    }

    ConvProgram prog_;
};

}  // namespace

Generator::Generator(const GenConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

TermPtr Generator::next_term() {
    if (cfg_.mode == GenMode::convertible) return unfloat(next_program());
    return TermGen(cfg_, rng_).root();
}

ConvProgram Generator::next_program() { return ProgramGen(cfg_, rng_).program(); }

TermPtr gen_term(const GenConfig& cfg) { return Generator(cfg).next_term(); }

}  // namespace contpass
