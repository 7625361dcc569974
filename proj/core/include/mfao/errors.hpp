#pragma once

#include <stdexcept>
#include <string>

namespace mfao {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's contract (wrong boundary side, mismatched grids, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The Neumann series stopped contracting.
class NonContractionError : public Error {
 public:
  using Error::Error;
};

/// A coefficient condition failed; `condition` names it.
class ValidationError : public Error {
 public:
  ValidationError(std::string condition, const std::string& what)
      : Error(condition + ": " + what), condition_(std::move(condition)) {}
  const std::string& condition() const { return condition_; }

 private:
  std::string condition_;
};

/// A source is too narrow for the grid that must represent it.
class UnresolvedSourceError : public Error {
 public:
  using Error::Error;
};

/// A logarithm was requested of a non-positive quantity.
class LogDomainError : public Error {
 public:
  using Error::Error;
};

/// Measurement data does not contain what an assembly step needs.
class IncompleteDataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfao
