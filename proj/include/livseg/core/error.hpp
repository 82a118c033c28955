#pragma once

#include <stdexcept>
#include <string>

namespace livseg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be parsed or its contents violate the declared format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Inputs disagree on grid dimensions or spacing.
class GridMismatchError : public Error {
public:
    using Error::Error;
};

/// An argument violates an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace livseg
