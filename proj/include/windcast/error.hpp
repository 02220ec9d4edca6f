#pragma once

#include <stdexcept>
#include <string>

namespace windcast {

/// Root of the library's exception hierarchy. The CLI maps the direct
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problems with the input data (exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

class UnfillableGapError : public DataError {
public:
    using DataError::DataError;
};

class DataQualityError : public DataError {
public:
    using DataError::DataError;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

/// Invalid configuration values (exit code 4).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite inputs or degenerate numerical problems.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateProblemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Failure of an iterative or simulated process to stay well behaved
/// (exit code 3).
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class ExplosiveSimulationError : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

}  // namespace windcast
