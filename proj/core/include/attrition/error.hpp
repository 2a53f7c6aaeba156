#pragma once

#include <stdexcept>
#include <string>

namespace attrition {

// Failure categories. The CLI maps these onto exit codes, so keep the set small.
enum class ErrorKind {
    Domain,         // inputs outside the admissible region of an operation
    Truncation,     // quadrature window too tight for the requested accuracy
    Solver,         // root finding, ODE or linear-algebra failure
    Assumption,     // model failed validation
    Mode,           // operation not defined for this model mode
    Inconsistency,  // a certificate that theory says must hold did not
    Oracle,         // dynamic-programming cross-check failed or diverged
    Estimation,     // Monte Carlo estimate unusable (too much censoring etc.)
    Config,         // malformed configuration
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace attrition
