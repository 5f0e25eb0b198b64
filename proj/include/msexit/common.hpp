#pragma once

#include <stdexcept>
#include <string>

namespace msexit {

// Error taxonomy mirrors the CLI exit codes: config=2, solver=3, invariant=4,
// statistical=5.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct InvariantError : std::runtime_error {
  explicit InvariantError(const std::string& what) : std::runtime_error(what) {}
};

struct StatError : std::runtime_error {
  explicit StatError(const std::string& what) : std::runtime_error(what) {}
};

struct Tolerances {
  double residual = 1e-8;
  double normalization = 1e-10;
  double transversality_floor = 1e-6;
};

}  // namespace msexit
