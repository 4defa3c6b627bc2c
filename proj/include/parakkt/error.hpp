#pragma once

#include <stdexcept>
#include <string>

namespace parakkt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  explicit UnsupportedDimension(int dim)
      : Error("unsupported dimension: " + std::to_string(dim) +
              " (only 1 and 2 are supported)"),
        dim_(dim) {}
  int dim() const { return dim_; }

 private:
  int dim_;
};

/// A callback returned NaN/Inf. `level` is the time level, `node` the flat
/// interior index (-1 when not attached to a grid node).
class NonFiniteValue : public Error {
 public:
  NonFiniteValue(const std::string& what, int level, int node)
      : Error(what + " is not finite at level " + std::to_string(level) +
              ", node " + std::to_string(node)),
        level_(level),
        node_(node) {}
  int level() const { return level_; }
  int node() const { return node_; }

 private:
  int level_;
  int node_;
};

class NewtonFailure : public Error {
 public:
  NewtonFailure(int step, double residual, int iterations)
      : Error("Newton failed at time step " + std::to_string(step) + " after " +
              std::to_string(iterations) +
              " iterations, residual=" + std::to_string(residual)),
        step_(step),
        residual_(residual) {}
  int step() const { return step_; }
  double residual() const { return residual_; }

 private:
  int step_;
  double residual_;
};

/// The effective step matrix I + dt*(A + diag(c)) lost positive definiteness
/// or CG stalled.
class LinearSolverBreakdown : public Error {
 public:
  LinearSolverBreakdown(const std::string& what, int step,
                        double smallest_diagonal)
      : Error(what + " at time step " + std::to_string(step) +
              " (smallest effective diagonal " +
              std::to_string(smallest_diagonal) + ")"),
        step_(step),
        smallest_diagonal_(smallest_diagonal) {}
  int step() const { return step_; }
  double smallest_diagonal() const { return smallest_diagonal_; }

 private:
  int step_;
  double smallest_diagonal_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace parakkt
