#pragma once

#include <stdexcept>
#include <string>

namespace excurse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad level, bad shape, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed to reach its target (quadrature, embedding,
/// Jacobian sign, inconsistent identification table).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Reading or writing an artifact failed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace excurse
