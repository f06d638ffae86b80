#pragma once

#include <stdexcept>
#include <string>

namespace sinefm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument values (non-positive stride, count < 1, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Tensor shape mismatches detected at op boundaries.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Descriptor / configuration validation failures.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Illegal object state (e.g. backward on a consumed record).
class StateError : public Error {
public:
    using Error::Error;
};

// Malformed input streams: bad magic, truncation, unparsable text.
class FormatError : public Error {
public:
    using Error::Error;
};

// Stream is well-formed but uses an unknown version or tag.
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

// Payload failed its integrity check.
class CorruptionError : public Error {
public:
    using Error::Error;
};

// Numeric failures: NaN loss, checksum of computed values, diverged solver.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace sinefm
