#pragma once

#include <stdexcept>
#include <string>

namespace compnull {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad alpha, empty input, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A document or data file could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A parsed object violates a structural invariant (overlap, bad probability).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Input data is numerically unusable (rank deficiency, missing values).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace compnull
