#pragma once

#include <stdexcept>
#include <string>

namespace fbd {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable tag used in structured CLI error reports.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

/// Evaluation requested at a declared singularity of a non-smooth field.
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("domain-error", what) {}
};

/// Quadrature or time-march produced a non-finite value.
struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error("numerical-error", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config-error", what) {}
};

struct InfeasibleConstants : Error {
    explicit InfeasibleConstants(const std::string& what) : Error("infeasible-constants", what) {}
};

struct InfeasibleExponent : Error {
    explicit InfeasibleExponent(const std::string& what) : Error("infeasible-exponent", what) {}
};

/// A precondition of an engine contract was violated (e.g. singular drift
/// handed to the SDE engine).
struct ContractError : Error {
    explicit ContractError(const std::string& what) : Error("contract-error", what) {}
};

}  // namespace fbd
