#pragma once

#include <stdexcept>
#include <string>

namespace fedor {

/// Raised when a mechanism or scenario configuration is inconsistent
/// (e.g. k >= n, unsorted weights, unknown scenario label).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation receives an argument outside its domain.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by the replicated simulation when the broadcast invariant is broken.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fedor
