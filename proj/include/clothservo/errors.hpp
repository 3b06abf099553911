#pragma once

#include <stdexcept>
#include <string>

namespace clothservo {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (wrong channel count, mismatched sizes, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Feature vectors of different layouts were combined.
class LayoutMismatch : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A parameter is outside its valid domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Not enough distinct samples to proceed.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// The cloth simulation blew up; carries the step at which it happened.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Reading a file failed; `field` names the offending entry when known.
class LoadError : public Error {
 public:
  LoadError(const std::string& what, std::string field = {})
      : Error(field.empty() ? what : what + " (field: " + field + ")"),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace clothservo
