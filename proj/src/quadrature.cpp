#include "msexit/quadrature.hpp"

#include <cmath>

namespace msexit {

namespace {

struct AdaptiveCtx {
  const std::function<double(double)>& f;
  double abs_tol;
  int max_depth;
  long evals = 0;
  double err_acc = 0.0;

  double sample(double x) {
    ++evals;
    const double v = f(x);
    if (!std::isfinite(v)) throw SolverError("adaptive quadrature: non-finite integrand");
    return v;
  }

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                 int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = sample(lm), frm = sample(rm);
    const double h = b - a;
    const double left = h / 12.0 * (fa + 4.0 * flm + fm);
    const double right = h / 12.0 * (fm + 4.0 * frm + fb);
    const double err = (left + right - whole) / 15.0;
    if (std::abs(err) <= tol || h <= std::abs(m) * 1e-15) {
      err_acc += std::abs(err);
      return left + right + err;
    }
    if (depth >= max_depth)
      throw SolverError("adaptive quadrature: max depth exceeded (singular integrand?)");
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, int max_depth) {
  if (!(abs_tol > 0.0)) throw ConfigError("adaptive quadrature: tolerance must be positive");
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  if (a == b) return {0.0, 0.0, 0};
  AdaptiveCtx ctx{f, abs_tol, max_depth};
  const double fa = ctx.sample(a);
  const double m = 0.5 * (a + b);
  const double fm = ctx.sample(m);
  const double fb = ctx.sample(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double v = ctx.recurse(a, b, fa, fm, fb, whole, abs_tol, 0);
  return {sign * v, ctx.err_acc, ctx.evals};
}

double composite_simpson(const std::vector<double>& values, double dx) {
  const size_t n = values.size();
  if (n < 2) throw ConfigError("composite_simpson: need at least 2 samples");
  if (!(dx > 0.0)) throw ConfigError("composite_simpson: dx must be positive");
  if (n == 2) return 0.5 * dx * (values[0] + values[1]);
  if (n == 3) return dx / 3.0 * (values[0] + 4.0 * values[1] + values[2]);

  size_t simpson_end = n;                // exclusive index of the pure-Simpson block
  const bool odd_intervals = (n % 2 == 0);
  if (odd_intervals) simpson_end = n - 3;  // leave a 3-interval tail for the 3/8 rule

  double acc = 0.0;
  if (simpson_end >= 3) {
    acc += values[0] + values[simpson_end - 1];
    for (size_t i = 1; i + 1 < simpson_end; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
    acc *= dx / 3.0;
  }
  if (odd_intervals) {
    const size_t j = simpson_end - 1;
    acc += 3.0 * dx / 8.0 *
           (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
  }
  return acc;
}

}  // namespace msexit
