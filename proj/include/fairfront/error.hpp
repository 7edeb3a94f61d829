#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairfront {

// Base of every error raised by the engine. The CLI maps the subclasses onto
// exit codes (config 2, data 3, everything else 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Input data is malformed or violates a precondition of the model.
class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SplitError : public DataError {
public:
    using DataError::DataError;
};

// Empirical evaluation requested but realized outcomes are missing.
class ModeError : public DataError {
public:
    using DataError::DataError;
};

class ScopeError : public Error {
public:
    using Error::Error;
};

class AnchorError : public Error {
public:
    using Error::Error;
};

// A metric is mathematically undefined for the given input (e.g. no positives).
class MetricError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

} // namespace fairfront
