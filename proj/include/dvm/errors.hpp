// errors.hpp - exception types shared by every dvm module
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dvm {

enum class ErrorKind {
  NonConformingSpacing,
  EmptyRegion,
  IsolatedNode,
  SingularMomentMatrix,
  ShapeMismatch,
  PoleAtZero,
  NonFiniteField,
  TooShort,
  InvalidMode,
  NoConvergence,
  ParseError,
  ValidationError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonConformingSpacing: return "NonConformingSpacing";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::IsolatedNode: return "IsolatedNode";
    case ErrorKind::SingularMomentMatrix: return "SingularMomentMatrix";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::PoleAtZero: return "PoleAtZero";
    case ErrorKind::NonFiniteField: return "NonFiniteField";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::InvalidMode: return "InvalidMode";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the time stepper when a field sample is NaN/Inf or exceeds the blow-up guard.
class NonFiniteFieldError : public Error {
 public:
  NonFiniteFieldError(long step, std::size_t node, double value, const std::string& field)
      : Error(ErrorKind::NonFiniteField,
              field + " at node " + std::to_string(node) + " reached " + std::to_string(value) +
                  " on step " + std::to_string(step)),
        step_(step), node_(node), value_(value) {}

  long step() const noexcept { return step_; }
  std::size_t node() const noexcept { return node_; }
  double value() const noexcept { return value_; }

 private:
  long step_;
  std::size_t node_;
  double value_;
};

/// Fixed-point iteration gave up; the last iterate is kept for inspection.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : Error(ErrorKind::NoConvergence, what), last_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_; }

 private:
  std::vector<double> last_;
};

}  // namespace dvm
