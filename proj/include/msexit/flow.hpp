#pragma once

#include <functional>
#include <vector>

#include "msexit/homogenize.hpp"

namespace msexit {

// Exit interval for the slow process; rare_endpoint marks which side the
// conditioned dynamics is steered to (none for plain exit problems).
struct ExitProblemSpec {
  enum class Rare { none, lower, upper };

  double lower = -1.0;
  double upper = 1.0;
  Rare rare_endpoint = Rare::none;

  void validate(double x0) const;  // lower < upper, x0 strictly inside
  double rare_state() const;       // throws unless rare_endpoint is set
};

// Effective flow X'(t) = drift(X) together with its linearization
// Phi'(t) = drift_slope(X) * Phi, Phi(0) = 1, on a uniform time grid.
// Node derivatives are kept so queries between nodes use cubic Hermite
// interpolation (matching the RK4 order well enough for root finding).
struct EffectiveTrajectory {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> linearization;
  std::vector<double> state_rate;          // drift(states[i])
  std::vector<double> linearization_rate;  // drift_slope(states[i]) * Phi[i]
  double start = 0.0;

  void validate() const;
  double horizon() const { return times.empty() ? 0.0 : times.back(); }

  double state_at(double t) const;
  double state_rate_at(double t) const;
  double linearization_at(double t) const;
};

EffectiveTrajectory integrate_linearized_flow(const std::function<double(double)>& drift,
                                              const std::function<double(double)>& drift_slope,
                                              double x0, double horizon, double step);

// Same, with drift = lambda_bar from the tabulated model; leaving the
// tabulated x range raises SolverError.
EffectiveTrajectory effective_flow(const HomogenizedModel& model, double x0, double horizon,
                                   double step);

struct HittingPoint {
  double time = 0.0;   // first boundary crossing time T
  double state = 0.0;  // exit point z (the boundary value crossed)
  double speed = 0.0;  // trajectory speed at the crossing, = effective drift at z
  bool at_upper = false;
};

// First crossing of the interval boundary: bracketed on the trajectory nodes,
// refined by bisection on the dense output.  No crossing within the horizon
// raises SolverError; |speed| <= transversality_floor raises InvariantError
// (tangential crossings break the exit-law normalization downstream).
HittingPoint hitting_time_deterministic(const EffectiveTrajectory& traj,
                                        const ExitProblemSpec& exit,
                                        double transversality_floor = 1e-6);

}  // namespace msexit
