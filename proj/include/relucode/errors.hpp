#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relucode {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input vector or matrix does not have the dimension the network expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Values violate a type invariant (non-finite entries, broken layer chain, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. `location` is a byte offset or line number as
/// described by the message.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t location)
      : Error(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class FileError : public Error {
 public:
  using Error::Error;
};

/// Codes from different networks (or of different length) were compared.
class IncompatibleCodesError : public Error {
 public:
  using Error::Error;
};

class InvalidThresholdError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

/// LP solver hit its iteration limit.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t iterations)
      : Error(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

class SeriesError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace relucode
