#pragma once

#include <stdexcept>
#include <string>

namespace autocon {

/// Shapes of operands do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A scalar or structural parameter is out of its valid range.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller broke a usage contract (e.g. backward on a non-scalar).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid run configuration or split layout.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input data (CSV, checkpoint, manifest).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace autocon
