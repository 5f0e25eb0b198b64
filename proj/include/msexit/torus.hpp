#pragma once

#include <functional>
#include <vector>

#include "msexit/common.hpp"

namespace msexit {

// Uniform grid y_k = k*period/n_points, k = 0..n_points-1, covering one period
// left-closed right-open.
struct TorusGrid {
  double period = 1.0;
  int n_points = 0;

  double spacing() const { return period / n_points; }
  double node(int k) const { return k * spacing(); }
  void validate() const;
};

// Samples of a period-rho function on a TorusGrid; evaluation between nodes is
// linear interpolation with wrap-around.
struct PeriodicField {
  TorusGrid grid;
  std::vector<double> values;

  void validate() const;
  double eval(double y) const;
};

PeriodicField sample_periodic(const TorusGrid& grid, const std::function<double(double)>& f);

// (1/rho) * integral over one period, by the periodic trapezoid rule (the mean
// of the samples); spectrally accurate for smooth periodic integrands.
double cell_average(const PeriodicField& f);

// Centered second-order difference with wrap-around.
PeriodicField periodic_derivative(const PeriodicField& f);

// Integral of f from 0 to y, 0 <= y <= period, by cumulative trapezoid.
double antiderivative_on_period(const PeriodicField& f, double y);

}  // namespace msexit
