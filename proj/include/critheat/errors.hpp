#pragma once

#include <stdexcept>
#include <string>

namespace critheat {

/// Broad classes of failure; the CLI maps them to exit codes.
enum class ErrorClass { invalid_config, numerical };

/// Base exception. `kind` is a short machine-readable tag such as
/// "degenerate-configuration" or "dimension-unsupported".
class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string kind, const std::string& message)
        : std::runtime_error(message), cls_(cls), kind_(std::move(kind)) {}

    ErrorClass error_class() const noexcept { return cls_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ErrorClass cls_;
    std::string kind_;
};

/// Inputs that violate a documented precondition.
class ConfigError : public Error {
public:
    ConfigError(std::string kind, const std::string& message)
        : Error(ErrorClass::invalid_config, std::move(kind), message) {}
};

/// A computation that could not reach its accuracy or convergence target.
class NumericalError : public Error {
public:
    NumericalError(std::string kind, const std::string& message)
        : Error(ErrorClass::numerical, std::move(kind), message) {}
};

}  // namespace critheat
