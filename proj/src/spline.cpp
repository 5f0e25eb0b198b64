#include "msexit/spline.hpp"

#include <algorithm>
#include <cmath>

#include "msexit/common.hpp"
#include "msexit/spectral.hpp"

namespace msexit {

void CubicSpline::build(std::vector<double> x, std::vector<double> y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size()) throw ConfigError("spline: need >= 2 matching nodes");
  for (int i = 1; i < n; ++i)
    if (!(x[i] > x[i - 1])) throw ConfigError("spline: nodes must be strictly increasing");
  xs = std::move(x);
  ys = std::move(y);
  m2.assign(n, 0.0);
  if (n == 2) return;  // linear

  // second-derivative system; small dense solve keeps the not-a-knot corner
  // rows trivial
  DenseMatrix A(n);
  std::vector<double> rhs(n, 0.0);
  auto h = [&](int i) { return xs[i + 1] - xs[i]; };
  for (int i = 1; i + 1 < n; ++i) {
    A.at(i, i - 1) = h(i - 1) / 6.0;
    A.at(i, i) = (h(i - 1) + h(i)) / 3.0;
    A.at(i, i + 1) = h(i) / 6.0;
    rhs[i] = (ys[i + 1] - ys[i]) / h(i) - (ys[i] - ys[i - 1]) / h(i - 1);
  }
  if (n == 3) {
    // single quadratic: m2 constant
    A.at(0, 0) = 1.0;
    A.at(0, 1) = -1.0;
    A.at(n - 1, n - 2) = 1.0;
    A.at(n - 1, n - 1) = -1.0;
  } else {
    // third-derivative continuity at the second and second-to-last node
    A.at(0, 0) = 1.0 / h(0);
    A.at(0, 1) = -1.0 / h(0) - 1.0 / h(1);
    A.at(0, 2) = 1.0 / h(1);
    A.at(n - 1, n - 3) = 1.0 / h(n - 3);
    A.at(n - 1, n - 2) = -1.0 / h(n - 3) - 1.0 / h(n - 2);
    A.at(n - 1, n - 1) = 1.0 / h(n - 2);
  }
  DenseLU lu;
  lu.factor(A);
  m2 = lu.solve(rhs);
}

int CubicSpline::locate(double& t) const {
  const double span = xs.back() - xs.front();
  const double slack = 1e-9 * span;
  if (t < xs.front() - slack || t > xs.back() + slack)
    throw SolverError("spline: evaluation outside tabulated range (extrapolation)");
  t = std::clamp(t, xs.front(), xs.back());
  const int n = static_cast<int>(xs.size());
  int i = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), t) - xs.begin()) - 1;
  return std::clamp(i, 0, n - 2);
}

double CubicSpline::eval(double t) const {
  double u = t;
  const int i = locate(u);
  const double hh = xs[i + 1] - xs[i];
  const double s = u - xs[i];
  const double b = (ys[i + 1] - ys[i]) / hh - hh * (2.0 * m2[i] + m2[i + 1]) / 6.0;
  return ys[i] + s * (b + s * (m2[i] / 2.0 + s * (m2[i + 1] - m2[i]) / (6.0 * hh)));
}

double CubicSpline::deriv(double t) const {
  double u = t;
  const int i = locate(u);
  const double hh = xs[i + 1] - xs[i];
  const double s = u - xs[i];
  const double b = (ys[i + 1] - ys[i]) / hh - hh * (2.0 * m2[i] + m2[i + 1]) / 6.0;
  return b + s * (m2[i] + s * (m2[i + 1] - m2[i]) / (2.0 * hh));
}

}  // namespace msexit
