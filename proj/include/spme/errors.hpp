#ifndef SPME_ERRORS_HPP
#define SPME_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spme {

// Invalid argument to an operation (bad range, mismatched shapes, unknown descriptor).
class ParameterError : public std::invalid_argument {
public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine failed (non-positive pivot, linear solve stagnated).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Time stepper failure. Carries the residual of the last Newton iterate and,
// once propagated through solve(), the index of the failing step.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double residual, long step = -1)
      : std::runtime_error(what), residual(residual), step(step) {}
  double residual;
  long step;
};

// dt too large for the reaction term; retry with a smaller step.
class StabilityError : public std::runtime_error {
public:
  explicit StabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Config file rejected. line == 0 means the problem is not tied to one line.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  int line;
};

} // namespace spme

#endif
