#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "msexit/engine.hpp"
#include "msexit/flow.hpp"
#include "msexit/functions.hpp"
#include "msexit/sde.hpp"
#include "msexit/torus.hpp"

namespace msexit {

// Langevin dynamics in a tilted rough potential,
//   dX = [-(eps/delta) Q'(X/delta) - V'(X)] dt + sqrt(2 eps D) dW,
// on an exit interval that the deterministic descent -V' leaves through the
// lower end.  The conditioned (h-transform) dynamics steers paths to the
// rare upper end instead.
struct RoughPotentialSpec {
  Poly1D V;        // confining potential, strictly convex over the interval
  TrigPoly1D Q;    // fast ripple; its period is rho
  double D = 1.0;  // temperature
  ExitProblemSpec interval;
  double x0 = 0.0;

  double rho() const { return Q.period; }

  // Geometry the conditioned exit law needs: D > 0, the interval strictly
  // above the anchor 0 of the h-integral, x0 strictly inside, V'' > 0 and
  // V' > 0 on the closed interval (the minimum of V then sits below the
  // interval and the descent drifts toward the lower end).  rare_endpoint
  // none resolves to upper; lower is the typical exit and is rejected.
  void validate() const;
  double rare_state() const;
};

// One-period Gibbs integrals of the ripple and the variance-enhancement
// factor they induce.
struct GibbsConstants {
  double K = 0.0;            // integral of e^{-Q/D} over one period
  double K_hat = 0.0;        // integral of e^{+Q/D} over one period
  double enhancement = 0.0;  // K*K_hat/rho^2 >= 1, equality iff Q is flat
};

// Periodic trapezoid over the grid nodes (spectrally accurate for trig
// polynomials); the grid must carry the ripple period and resolve it.
GibbsConstants gibbs_constants(const RoughPotentialSpec& rough, const TorusGrid& grid);

// Same constants by adaptive quadrature, for places needing one number
// rather than a grid study.
GibbsConstants gibbs_constants(const RoughPotentialSpec& rough);

// Averaged corrector drift of the gradient fast-drift model at local slope
// vprime, evaluated as a direct nested double quadrature:
//   -(rho/(K K_hat D)) vprime^2
//     * int_0^rho (1 - (rho/K_hat) e^{Q(y)/D})
//                 int_0^y (1 - (rho/K) e^{-Q(z)/D}) dz dy.
double gradient_extra_drift(const TrigPoly1D& Q, double D, double vprime);

// Deterministic exit time and limiting variance of the conditioned exit law,
//   T = enh * int_{x0}^{z} dy/V'(y),  var = 2 D enh^2 int_{x0}^{z} dz/V'(z)^3,
// z the rare endpoint, both by adaptive quadrature.
struct ConditionalExitStats {
  double T = 0.0;
  double limit_variance = 0.0;
  double enhancement = 0.0;
  double rare_state = 0.0;
};

ConditionalExitStats conditional_exit_stats(const RoughPotentialSpec& rough);

// Sampler for the conditioned dynamics.  The correction drift
// 2 eps D h(x) / int_0^x h uses
//   ln h(x) = (Q(x/delta) - Q(0))/D + (V(x) - V(0))/(eps D)
// analytically, and a log-space cumulative trapezoid table for the integral;
// everything stays in log space until the final ratio, which is of order
// V'/(eps D).
class ConditionedSampler {
 public:
  // horizon <= 0 picks 3 T(x0).  dt must resolve the ripple cells
  // (dt <= resolution_factor * delta^2/eps) unless Q is flat.
  ConditionedSampler(const RoughPotentialSpec& rough, double epsilon, double delta, double dt,
                     std::uint64_t seed, double horizon = 0.0, double resolution_factor = 0.1);

  PathRecord simulate_path(std::uint64_t path_index = 0) const;
  std::vector<LaneOut> run_paths(int n_paths, std::uint64_t path_base = 0) const;

  // conditioned drift exactly as the step loop evaluates it
  double drift_at(double x) const;

  double dt() const { return dt_; }
  double horizon() const { return horizon_; }
  std::uint64_t n_steps() const { return n_steps_; }
  const ConditionalExitStats& prediction() const { return stats_; }
  const ConditionedProgram& program() const { return prog_; }

 private:
  RoughPotentialSpec rough_;
  double epsilon_ = 0.0;
  double delta_ = 0.0;
  double dt_ = 0.0;
  double horizon_ = 0.0;
  std::uint64_t seed_ = 0;
  std::uint64_t n_steps_ = 0;
  ConditionalExitStats stats_;
  ConditionedProgram prog_;
};

PathRecord simulate_conditioned_path(const RoughPotentialSpec& rough, double epsilon,
                                     double delta, double dt, std::uint64_t seed);

// Monte Carlo check of the conditioned exit law: normalizes exit times as
// (tau - T)/sqrt(eps) and compares them to the predicted zero-mean Gaussian.
struct ConditionalCltReport {
  ConditionalExitStats predicted;
  double epsilon = 0.0;
  double delta = 0.0;
  int n_paths = 0;
  int n_rare = 0;            // exits at the rare endpoint; these enter the stats
  int n_wrong_endpoint = 0;  // exits at the typical end despite conditioning
  int n_no_exit = 0;         // still inside at the horizon
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;  // Gaussian-based, s^2 sqrt(2/(n-1))
  double ks = 0.0;           // against N(0, limit_variance)
  std::vector<double> normalized;
};

// Misbehaving paths (no exit, or wrong endpoint) beyond 1% of n_paths
// invalidate the run.
ConditionalCltReport conditional_exit_clt_check(const RoughPotentialSpec& rough, double epsilon,
                                                double delta, int n_paths, double dt,
                                                std::uint64_t seed);

// Scale function u and speed measure v of the conditioned dynamics, anchored
// u(0) = v(0) = 0 and tabulated at the x_grid nodes:
//   u(x) =             int_0^x exp{+(Q(y/delta) - Q(0))/D} e^{-A(y)} dy,
//   v(x) = 1/(eps D) * int_0^x exp{-(Q(y/delta) - Q(0))/D} e^{+A(y)} dy,
// with A = (V - V(0))/(eps D).  Without delta the oscillatory factors are
// replaced by their cell averages (the delta -> 0 limit).
struct ScaleSpeedTable {
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> v;
};

ScaleSpeedTable scale_speed_functions(const RoughPotentialSpec& rough, double epsilon,
                                      std::optional<double> delta,
                                      const std::vector<double>& x_grid);

// Coefficient-set view of the same dynamics for the homogenization pipeline:
// b = -Q'(y), c = -V'(x), sigma = sqrt(2 D), psi = 0.
PeriodicCoefficientSet langevin_coefficients(const RoughPotentialSpec& rough);

}  // namespace msexit
