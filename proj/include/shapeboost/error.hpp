#pragma once

#include <stdexcept>
#include <string>

namespace shapeboost {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, malformed configuration, or data that violates a
/// precondition. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// A solver failed: singular system, exhausted iteration budget,
/// infeasible constraint set. The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A serialized model could not be decoded.
class FormatError : public InputError {
public:
    using InputError::InputError;
};

} // namespace shapeboost
