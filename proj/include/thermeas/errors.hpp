// errors.hpp - exception types shared by every thermeas module

#pragma once

#include <stdexcept>
#include <string>

namespace thermeas {

// Malformed input: wrong dimensions, non-Hermitian operators, effects outside [0, 1], ...
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Parameter outside the domain of a function (beta <= 0, non-finite values).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A structural precondition of an operation does not hold. Carries the
// continuous violation magnitude that decided it.
class PreconditionError : public std::logic_error {
public:
    PreconditionError(const std::string& what, double defect)
        : std::logic_error(what), defect_(defect) {}

    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

} // namespace thermeas
