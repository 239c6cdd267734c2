#pragma once

#include <stdexcept>
#include <string>

namespace tokd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extents that do not line up (shape mismatch, indivisible image sizes, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent architecture or hyperparameter settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf values or non-finite objective evaluations.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Dataset contents that cannot satisfy a request (too few views, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its contents violate the documented layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Parsed values violate a domain invariant (e.g. an improper rotation).
class ValidationError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace tokd
