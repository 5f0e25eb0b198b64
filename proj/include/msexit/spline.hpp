#pragma once

#include <vector>

namespace msexit {

// Not-a-knot cubic spline on a strictly increasing grid.  Evaluation outside
// the grid (beyond a relative slack of 1e-9) is an extrapolation error.
struct CubicSpline {
  std::vector<double> xs, ys, m2;  // nodes, values, second derivatives

  void build(std::vector<double> x, std::vector<double> y);
  double eval(double t) const;
  double deriv(double t) const;
  bool empty() const { return xs.empty(); }
  double x_min() const { return xs.front(); }
  double x_max() const { return xs.back(); }

 private:
  int locate(double& t) const;
};

}  // namespace msexit
