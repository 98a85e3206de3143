#pragma once

#include <stdexcept>
#include <string>

namespace dendsim {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument or violated precondition.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Referenced entity (segment, electrode, node) does not exist.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Singular system, non-convergence, or other numerical failure.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Time step violates the integration stability contract.
class StepError : public Error {
public:
    using Error::Error;
};

/// Config file parse or semantic error.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File read/write failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dendsim
