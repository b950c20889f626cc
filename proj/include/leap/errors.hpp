#pragma once

#include <stdexcept>
#include <string>

namespace leap {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidFrame : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class KeyLengthError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class ProvisioningError : public Error {
public:
    using Error::Error;
};

class ReassemblyError : public Error {
public:
    using Error::Error;
};

/// The pair's counter reached the per-session message limit.
class RekeyRequired : public Error {
public:
    using Error::Error;
};

/// Bad configuration input. `field()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace leap
