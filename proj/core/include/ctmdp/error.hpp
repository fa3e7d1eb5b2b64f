#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctmdp {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `position` is a 0-based character offset into the
/// offending string (expression source or document), or npos when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position = npos)
        : Error(position == npos ? what : what + " (at offset " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t position_;
};

/// Well-formed input that violates a model invariant (undeclared names,
/// dimension mismatches, states outside the region, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// A rate expression produced a negative or non-finite value.
class RateError : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A resource cap (state-space size, enumeration size) was exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Numerical failure (overflowing rates, non-convergent series).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace ctmdp
