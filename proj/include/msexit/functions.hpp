#pragma once

#include <limits>
#include <vector>

#include "msexit/torus.hpp"

namespace msexit {

// Polynomial c0 + c1 x + c2 x^2 + ...
struct Poly1D {
  std::vector<double> coeffs;

  double eval(double x) const;
  Poly1D derivative() const;
  bool is_constant() const;

  static Poly1D constant(double c) { return Poly1D{{c}}; }
};

// a0 + sum_k [ ac_k cos(2 pi k y / period) + as_k sin(2 pi k y / period) ].
struct TrigPoly1D {
  double period = 1.0;
  double a0 = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  double eval(double y) const;
  TrigPoly1D derivative() const;
  bool is_constant() const;

  static TrigPoly1D constant(double c, double period = 1.0) {
    TrigPoly1D t;
    t.period = period;
    t.a0 = c;
    return t;
  }
};

// Coefficient of the slow/fast system as a sum of separable products
// f(x) g(y).  Every built-in coefficient form the config layer accepts maps
// onto this representation, which keeps evaluation branch-free in the path
// engine.
struct SeparableTerm {
  Poly1D in_x;
  TrigPoly1D in_y;
};

struct CoefficientField {
  std::vector<SeparableTerm> terms;

  double eval(double x, double y) const;
  double d_dx(double x, double y) const;
  double d_dy(double x, double y) const;
  bool x_independent() const;
  bool y_independent() const;
  double period() const;

  static CoefficientField constant(double c, double period = 1.0);
  static CoefficientField of_x(const Poly1D& p, double period = 1.0);
  static CoefficientField of_y(const TrigPoly1D& t);
};

// The fields of the two-scale SDE
//   dX = [ (eps/delta) b(X, X/delta) + c(X, X/delta) + eps^{a1/2} psi ] dt
//        + sqrt(eps) sigma(X, X/delta) dW,
// all period-rho in the fast variable.  gamma is the scale-interaction
// parameter (+inf when the fast drift dominates).
struct PeriodicCoefficientSet {
  int dimension = 1;
  double period = 1.0;
  CoefficientField b;
  CoefficientField c;
  CoefficientField sigma;
  CoefficientField psi;
  CoefficientField psi_limit;
  double gamma = std::numeric_limits<double>::infinity();

  // Sampled checks: sigma^2 uniformly positive, all fields period-rho in y.
  void validate(double x_lo, double x_hi) const;
  double sigma_min(double x_lo, double x_hi) const;
};

}  // namespace msexit
