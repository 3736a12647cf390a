#pragma once

#include <stdexcept>
#include <string>

namespace jist {

/// Raised when a caller violates an operation's precondition
/// (dimension mismatch, empty input, out-of-range parameter).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a file cannot be read, parsed, or validated.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical routine cannot produce a result
/// (e.g. an undamped pseudo-inverse of a singular Jacobian).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ContractError(what);
}

}  // namespace jist
