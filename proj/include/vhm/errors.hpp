#pragma once

#include <stdexcept>
#include <string>

namespace vhm {

/// Precondition or argument validation failure.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input had nothing to score (no sentences, no records).
class EmptyInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transport-level failure that may succeed on a later attempt.
class RetriableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A remote service answered, but the answer is unusable. Carries the raw payload.
class ContentError : public std::runtime_error {
public:
    ContentError(const std::string& what, std::string payload)
        : std::runtime_error(what), payload_(std::move(payload)) {}
    const std::string& payload() const noexcept { return payload_; }

private:
    std::string payload_;
};

/// Misconfiguration (bad credentials, bad flags). Never retried; aborts a run.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Protocol violation reported by a peer (bad request, oversize batch).
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(const std::string& what, int status)
        : std::runtime_error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vhm
