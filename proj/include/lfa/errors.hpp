#pragma once

#include <stdexcept>
#include <string>

namespace lfa {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent input data (corpus records, plans, shapes).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad run configuration or usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File system failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Chat/embedding provider failures (transport, status, contract).
class ProviderError : public Error {
public:
    using Error::Error;
};

} // namespace lfa
