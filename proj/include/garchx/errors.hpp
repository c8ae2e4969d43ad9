#pragma once

#include <stdexcept>
#include <string>

namespace garchx {

/// A parameter or configuration lies outside its admissible domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a singular or non-finite intermediate.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The profile optimizer failed at a specific grid value of pi.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double pi)
        : std::runtime_error(what), pi_(pi) {}
    double pi() const noexcept { return pi_; }

private:
    double pi_;
};

}  // namespace garchx
