#pragma once

#include <stdexcept>
#include <string>

namespace rfm {

/// A computation produced a non-finite value. `term()` names the offending
/// expression (e.g. "cstr.dT/dt.reaction").
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string term, const std::string& what)
        : std::runtime_error(what + " [" + term + "]"), term_(std::move(term)) {}
    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too many simulations of one task were rejected; the caller should draw a
/// fresh parameter set.
class TaskInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingCheckpoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyValidation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace rfm
