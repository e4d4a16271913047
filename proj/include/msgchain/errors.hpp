#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace msgchain {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ConfigMismatch : public Error {
public:
    using Error::Error;
};

/// A joint action that cannot be applied (wrong arity, send over a non-edge, ...).
class MalformedJointAction : public Error {
public:
    MalformedJointAction(const std::string& what, std::int64_t round)
        : Error("round " + std::to_string(round) + ": " + what), round_(round)
    {
    }
    std::int64_t round() const noexcept { return round_; }

private:
    std::int64_t round_;
};

class AdversaryExhausted : public Error {
public:
    using Error::Error;
};

class NotEquivalent : public Error {
public:
    using Error::Error;
};

class PendingOperation : public Error {
public:
    using Error::Error;
};

class ProtocolViolation : public Error {
public:
    using Error::Error;
};

/// A constructed run failed validation. Signals a defect in the construction.
class ValidationFailure : public Error {
public:
    using Error::Error;
};

class PreconditionFailed : public Error {
public:
    using Error::Error;
};

class HistoryTooLarge : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ConstraintError : public Error {
public:
    using Error::Error;
};

} // namespace msgchain
