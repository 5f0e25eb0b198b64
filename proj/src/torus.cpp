#include "msexit/torus.hpp"

#include <cmath>

namespace msexit {

void TorusGrid::validate() const {
  if (!(period > 0.0) || !std::isfinite(period))
    throw ConfigError("torus grid: period must be positive and finite");
  if (n_points < 8) throw ConfigError("torus grid: need n_points >= 8");
}

void PeriodicField::validate() const {
  grid.validate();
  if (values.size() != static_cast<size_t>(grid.n_points))
    throw InvariantError("periodic field: sample count does not match grid");
  for (double v : values)
    if (!std::isfinite(v)) throw InvariantError("periodic field: non-finite sample");
}

double PeriodicField::eval(double y) const {
  const int n = grid.n_points;
  const double rho = grid.period;
  double u = y - rho * std::floor(y / rho);
  if (u >= rho) u = 0.0;  // rounding at the seam
  const double t = u / grid.spacing();
  int k = static_cast<int>(t);
  if (k >= n) k = n - 1;
  const double frac = t - k;
  const int k1 = (k + 1 == n) ? 0 : k + 1;
  return values[k] * (1.0 - frac) + values[k1] * frac;
}

PeriodicField sample_periodic(const TorusGrid& grid, const std::function<double(double)>& f) {
  grid.validate();
  PeriodicField out;
  out.grid = grid;
  out.values.resize(grid.n_points);
  for (int k = 0; k < grid.n_points; ++k) out.values[k] = f(grid.node(k));
  out.validate();
  return out;
}

double cell_average(const PeriodicField& f) {
  f.validate();
  double s = 0.0;
  for (double v : f.values) s += v;
  return s / f.grid.n_points;
}

PeriodicField periodic_derivative(const PeriodicField& f) {
  f.validate();
  const int n = f.grid.n_points;
  const double inv2h = 1.0 / (2.0 * f.grid.spacing());
  PeriodicField out;
  out.grid = f.grid;
  out.values.resize(n);
  for (int k = 0; k < n; ++k) {
    const int kp = (k + 1 == n) ? 0 : k + 1;
    const int km = (k == 0) ? n - 1 : k - 1;
    out.values[k] = (f.values[kp] - f.values[km]) * inv2h;
  }
  return out;
}

double antiderivative_on_period(const PeriodicField& f, double y) {
  f.validate();
  const double rho = f.grid.period;
  if (y < 0.0 || y > rho)
    throw ConfigError("antiderivative_on_period: y outside [0, period]");
  const int n = f.grid.n_points;
  const double h = f.grid.spacing();
  int m = static_cast<int>(y / h);
  if (m > n) m = n;
  while (m > 0 && m * h > y) --m;  // guard against rounding in y/h
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    const int jp = (j + 1 == n) ? 0 : j + 1;
    acc += 0.5 * (f.values[j] + f.values[jp]) * h;
  }
  const double rest = y - m * h;
  if (rest > 0.0 && m < n) {
    const double fa = f.values[m];
    const double fb = f.eval(y);
    acc += 0.5 * (fa + fb) * rest;
  }
  return acc;
}

}  // namespace msexit
