#pragma once

#include <stdexcept>
#include <string>

namespace relkit {

// Root of every error the toolkit throws. Callers that only need to report
// a message can catch this; the CLI maps the subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix dimensions disagree with what a model or index expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// An argument is outside its valid domain (k = 0, fraction >= 1, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Missing or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input columns do not match the declared or stored schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed file content (bad number, ragged CSV row, bad JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Serialized bundle carries a format version this build cannot read.
class VersionError : public Error {
 public:
  using Error::Error;
};

// A model cannot be fitted on the given data (e.g. a single class).
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace relkit
