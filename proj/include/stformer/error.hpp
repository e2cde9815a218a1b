#pragma once

#include <stdexcept>
#include <string>

namespace stformer {

/// Base for every error raised by the library. The CLI maps each subclass
/// onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A model, train or run configuration violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An API was called in the wrong state (unfitted normalizer, non-scalar loss).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or divergence during forward/backward/training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined on the given data (zero scaling denominator).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint header, version or checksum mismatch.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace stformer
