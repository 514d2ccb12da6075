#pragma once

#include <stdexcept>
#include <string>

namespace plepi {

/// Root of the library's exception hierarchy. The CLI maps each branch to
/// an exit code: ConfigError -> 2, DataError -> 3, NumericalError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// codebook
class DuplicateEntry : public DataError {
public:
    using DataError::DataError;
};

class LengthMismatch : public DataError {
public:
    using DataError::DataError;
};

class BadAlphabet : public DataError {
public:
    using DataError::DataError;
};

class InfeasibleDesign : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// noisylabel
class IncompleteField : public DataError {
public:
    using DataError::DataError;
};

// basecaller
class ShapeMismatch : public DataError {
public:
    using DataError::DataError;
};

// metrics
class UndefinedMetric : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace plepi
