#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfcn {

/// Operand dimensions do not chain.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a structural invariant (asymmetric graph, bad labels, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric parameter is out of its legal range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API precondition was broken by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The objective handed to the gradient checker is not a pure function.
class DeterminismError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training loss became non-finite.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::string phase, std::size_t iteration, const std::string& what)
      : std::runtime_error(what), phase_(std::move(phase)), iteration_(iteration) {}

  const std::string& phase() const noexcept { return phase_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::string phase_;
  std::size_t iteration_;
};

}  // namespace dfcn
