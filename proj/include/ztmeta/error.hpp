#pragma once

#include <stdexcept>
#include <string>

namespace ztmeta {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV rows, CLI values).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input that parses but violates a data invariant (non-positive exposure, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operation invoked on a state where it has nothing to do or cannot apply.
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace ztmeta
