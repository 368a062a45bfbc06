// Exception types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace cdgreen {

// Target point coincides with the source point (scaled distance below 1e-12).
struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

// Geometry or argument outside the supported domain.
struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Adaptive integration detected a non-integrable blow-up near the singular point.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Cell budget exhausted before the tolerance was met; carries the partial value.
struct BudgetError : std::runtime_error {
  BudgetError(const std::string& what, double partial_value, double partial_error,
              long long cells)
      : std::runtime_error(what),
        partial_value(partial_value),
        partial_error(partial_error),
        cells(cells) {}
  double partial_value;
  double partial_error;
  long long cells;
};

// Linear solver failed to reach the requested residual.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual, long long iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  long long iterations;
};

// Malformed study configuration.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace cdgreen
