#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loopmod {

/// Malformed input text (edge lists, partition files, LFR files).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  /// 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// The active-set QP did not reach the requested KKT residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (kkt residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Loop enumeration exceeded the caller's guard.
class LoopCountOverflow : public std::runtime_error {
 public:
  explicit LoopCountOverflow(std::size_t limit)
      : std::runtime_error("loop enumeration exceeded " + std::to_string(limit) + " loops"),
        limit_(limit) {}

  std::size_t limit() const { return limit_; }

 private:
  std::size_t limit_;
};

/// Spectral bisection needs a connected graph.
class DisconnectedGraphError : public std::invalid_argument {
 public:
  explicit DisconnectedGraphError(std::size_t components)
      : std::invalid_argument("graph is disconnected (" + std::to_string(components) +
                              " components)"),
        components_(components) {}

  std::size_t components() const { return components_; }

 private:
  std::size_t components_;
};

}  // namespace loopmod
