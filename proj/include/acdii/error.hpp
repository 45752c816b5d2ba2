#pragma once

#include <stdexcept>
#include <string>

namespace acdii {

/// Bad configuration, malformed files, or violated input invariants (CLI exit code 2).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure of a numerical procedure on valid input (CLI exit code 1).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse failure while decoding a field file; `field()` names the offending header key or section.
class FieldParseError : public InputError {
public:
    FieldParseError(std::string field, const std::string& what)
        : InputError(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class AssemblyError : public InputError {
public:
    using InputError::InputError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : NumericalError(what), residual_(residual), iterations_(iterations) {}
    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

} // namespace acdii
