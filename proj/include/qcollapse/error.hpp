#pragma once

#include <stdexcept>
#include <string>

namespace qcollapse {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: parameters, presets, config files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Internal numerical consistency check failed (cross-validation, oracle mismatch).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// An operation is mathematically undefined in the current state.
class DomainError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace qcollapse
