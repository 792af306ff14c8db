#pragma once

#include <stdexcept>
#include <string>

namespace medprompt {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input bytes: JSON syntax errors, wrong field types, bad enum names.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Structurally well-formed input that violates a documented invariant
/// (duplicate ids, out-of-range values, missing slots, ...).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Bad or inconsistent configuration (weights not summing to one, unknown keys,
/// out-of-order bounds, ...).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Remote backend failure: unreachable endpoint, retries exhausted,
/// non-conforming response.
class BackendError : public Error {
  public:
    using Error::Error;
};

} // namespace medprompt
