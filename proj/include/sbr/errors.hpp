#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbr {

// Base of every error the library throws. The CLI maps the subclasses onto
// exit codes (see tools/sbrepair.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad input data: non-finite features, unknown schemas, misaligned files.
class DataError : public Error {
public:
    using Error::Error;
};

class RecordError : public DataError {
public:
    RecordError(std::size_t index, const std::string& what)
        : DataError("record " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class UndefinedWeightsError : public DataError {
public:
    using DataError::DataError;
};

class QuenchedError : public Error {
public:
    using Error::Error;
};

class NotStoppedError : public Error {
public:
    using Error::Error;
};

class InsufficientSupportError : public DataError {
public:
    using DataError::DataError;
};

class UnfittedGroupError : public DataError {
public:
    using DataError::DataError;
};

class EstimationError : public DataError {
public:
    using DataError::DataError;
};

class IncompatibleDensityError : public Error {
public:
    using Error::Error;
};

class UndefinedRatioError : public DataError {
public:
    using DataError::DataError;
};

// The geometric baseline only repairs members of its fitted sample.
class OffSampleUnsupportedError : public DataError {
public:
    using DataError::DataError;
};

class SplitError : public DataError {
public:
    using DataError::DataError;
};

class NonConvergenceError : public Error {
public:
    using Error::Error;
};

class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace sbr
