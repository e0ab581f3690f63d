#pragma once

#include <stdexcept>
#include <string>

namespace printacc {

// Base of every error raised by the library. The CLI maps these to the
// data-format exit code; anything else escaping is treated as internal.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or truncated input files.
class FormatError : public Error {
public:
    using Error::Error;
};

// Geometry that violates an operation's precondition (open mesh, degenerate
// triangle, coincident points, ray misses).
class GeometryError : public Error {
public:
    using Error::Error;
};

// Numeric arguments outside an operation's domain.
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace printacc
