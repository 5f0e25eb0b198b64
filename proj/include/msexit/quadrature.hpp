#pragma once

#include <functional>
#include <vector>

#include "msexit/common.hpp"

namespace msexit {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
};

// Adaptive Simpson with Richardson error estimate (S_left + S_right - S)/15.
// Throws SolverError on non-finite integrand values or depth exhaustion.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_depth = 48);

// Composite Simpson over equally spaced samples; values.size() >= 2.  Odd
// interval counts finish with a 3/8 block so the order stays 4.
double composite_simpson(const std::vector<double>& values, double dx);

}  // namespace msexit
