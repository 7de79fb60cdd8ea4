#pragma once

#include <stdexcept>
#include <string>

namespace koopgeo {

// Incompatible torus dimensions between two objects.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input outside an operation's domain (null vector, non-unimodular matrix, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Mode components leaving the safe integer range.
struct RangeError : std::overflow_error {
    using std::overflow_error::overflow_error;
};

// Discretization breakdown: orthogonal neighbours, discontinuous families.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Refinement cap hit without meeting the requested tolerance.
struct ConvergenceError : NumericalError {
    ConvergenceError(const std::string& what, double previous, double last)
        : NumericalError(what), previous_phase(previous), last_phase(last) {}
    double previous_phase;
    double last_phase;
};

// Scenario validation failure; `key` names the offending entry.
struct ConfigError : std::runtime_error {
    ConfigError(std::string key_, const std::string& what)
        : std::runtime_error(key_ + ": " + what), key(std::move(key_)) {}
    std::string key;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace koopgeo
