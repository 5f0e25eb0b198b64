#pragma once

#include <limits>

namespace msexit {

// Scaling regime of the two-scale SDE at a concrete epsilon.
//
// Regime 1 (fast drift dominates, gamma = +inf): delta = eps^p with p > 1,
// so theta = delta/eps = eps^(p-1) and zeta = p - 1.
//
// Regime 2 (matched scales, finite gamma >= 0): the configured schedule is
// delta = eps/(gamma + eps^zeta), which makes theta = eps/delta - gamma equal
// eps^zeta exactly; here the exponent argument IS zeta.
//
// ell = lim eps^m/theta is decided symbolically from the exponents, never by
// numerically taking a limit.
struct ActiveTerms {
  bool J_drift = false;
  bool Psi_drift = false;
  bool noise = false;
  bool initial_perturbation = false;
};

struct RegimeClassification {
  int regime_index = 1;
  double epsilon = 0.0;
  double delta_exponent = 0.0;  // p in regime 1, zeta in regime 2
  double gamma = std::numeric_limits<double>::infinity();
  double a1 = std::numeric_limits<double>::infinity();
  double a2 = std::numeric_limits<double>::infinity();

  double delta = 0.0;
  double theta = 0.0;
  double m = 0.0;
  double ell = 0.0;  // one of {0, 1, +inf} under pure power laws
  double beta = 0.0;
  double zeta = 0.0;
  ActiveTerms active;
};

RegimeClassification classify_regime(double epsilon, double delta_exponent, double gamma,
                                     double a1, double a2);

}  // namespace msexit
