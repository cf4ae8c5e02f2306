#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace contpass {

enum class ErrorCode {
    fuel_exhausted,
    unbound_var,
    unbound_fun,
    dangling_location,
    type_error,
    arity_mismatch,
    monitor_violation,
    stuck,
    not_well_formed,
    not_liftable,
    no_fixpoint,
    not_closed,
    target_not_found,
    duplicate_function,
};

/// Upper-case name, e.g. "FUEL_EXHAUSTED".
const char* code_name(ErrorCode c);

/// Runtime failure of an evaluator, machine or transformation.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::uint64_t step = 0)
        : std::runtime_error(std::string(code_name(code)) + ": " + message),
          code_(code),
          detail_(message),
          step_(step) {}

    ErrorCode code() const { return code_; }
    const std::string& detail() const { return detail_; }
    std::uint64_t step() const { return step_; }

private:
    ErrorCode code_;
    std::string detail_;
    std::uint64_t step_;
};

}  // namespace contpass
