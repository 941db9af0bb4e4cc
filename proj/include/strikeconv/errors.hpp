#pragma once

#include <stdexcept>
#include <string>

namespace strikeconv {

/// Invalid or non-finite caller input.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but outside the domain where the quantity exists
/// (e.g. an option price outside its no-arbitrage bounds).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative or simulated computation failed to produce a usable number.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The linear 1-STOSC equation has a (near) zero coefficient in a.
class DegenerateConventionError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace strikeconv
