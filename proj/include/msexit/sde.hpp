#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "msexit/engine.hpp"
#include "msexit/flow.hpp"
#include "msexit/functions.hpp"
#include "msexit/regime.hpp"

namespace msexit {

// Law of the initial-condition perturbation xi0 (the family xi^eps is
// replaced by its limit): point mass or Gaussian.
struct InitialLaw {
  enum class Kind { none, point, gaussian };
  Kind kind = Kind::none;
  double value = 0.0;   // point-mass location / Gaussian mean
  double stddev = 0.0;  // Gaussian only

  void validate() const;
  double mean() const { return kind == Kind::none ? 0.0 : value; }
  double variance() const { return kind == Kind::gaussian ? stddev * stddev : 0.0; }
  double sample(std::uint64_t seed, std::uint64_t path) const;
};

struct SimulationSpec {
  PeriodicCoefficientSet coeffs;
  RegimeClassification regime;
  double x0 = 0.0;
  InitialLaw xi;
  double dt = 0.0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  double resolution_factor = 0.1;      // dt <= rf * delta^2 / epsilon
  std::uint64_t step_budget = 100000000ull;  // per path

  void validate() const;
  std::uint64_t n_steps() const;
  double xi_scale() const;  // epsilon^{a2/2}, zero when a2 is absent
};

struct ExitRecord {
  double tau = 0.0;
  double exit_state = 0.0;
  bool at_upper = false;
  std::uint64_t exit_step = 0;  // index of the crossing step
};

struct PathRecord {
  std::vector<double> times;
  std::vector<double> states;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::optional<ExitRecord> exit;
};

MultiscaleProgram build_multiscale_program(const PeriodicCoefficientSet& coeffs,
                                           const RegimeClassification& regime);

// Euler-Maruyama path with full trajectory recording; stops at the horizon or
// the first boundary crossing when an exit problem is given.
PathRecord simulate_path(const SimulationSpec& spec, const ExitProblemSpec* exit = nullptr,
                         std::uint64_t path_index = 0);

// First step leaving (lower, upper) on a recorded path; crossing time by
// linear interpolation.  Absent when the path never leaves.
std::optional<ExitRecord> detect_exit(const PathRecord& path, const ExitProblemSpec& exit);

// eta^eps_t = (X^eps_t - Xbar_t)/beta on the path's time grid
std::vector<double> extract_fluctuation(const PathRecord& path, const EffectiveTrajectory& traj,
                                        double beta);

// Ensemble entry point for the statistics harness: paths path_base ..
// path_base+n-1, one LaneOut each, independent of batching.
void run_paths(const SimulationSpec& spec, const ExitProblemSpec* exit, int n_paths,
               std::uint64_t path_base, LaneOut* out);

}  // namespace msexit
