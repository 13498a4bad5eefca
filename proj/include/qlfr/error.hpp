#pragma once

#include <stdexcept>
#include <string>

namespace qlfr {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed records, unknown labels, insufficient classes.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (unknown keys, dangling references).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A backend call failed after retries, or failed permanently.
class BackendError : public Error {
public:
    using Error::Error;
};

/// Network hiccups, 429s and 5xx responses. Retried by CompletionClient.
class TransientBackendError : public BackendError {
public:
    using BackendError::BackendError;
};

/// The provider declined to answer. Runners mark the example and move on.
class RefusalError : public BackendError {
public:
    using BackendError::BackendError;
};

/// The backend cannot score candidate continuations.
class CapabilityError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Too many per-example failures in a batch run.
class FailureThresholdError : public Error {
public:
    using Error::Error;
};

}  // namespace qlfr
