#pragma once

#include <stdexcept>
#include <string>

namespace hlc {

// Base of every error the library throws. The CLI maps the subclasses onto
// exit codes (validation -> 2, budget/overflow/numerical -> 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input or a violated precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Enumeration or sample budget would be exceeded.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Integer arithmetic left the checked range.
class OverflowError : public Error {
public:
    using Error::Error;
};

// A numerical procedure failed its own consistency check.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace hlc
