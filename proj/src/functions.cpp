#include "msexit/functions.hpp"

#include <cmath>
#include <cstdlib>

namespace msexit {

double Poly1D::eval(double x) const {
  double acc = 0.0;
  for (size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

Poly1D Poly1D::derivative() const {
  Poly1D d;
  if (coeffs.size() <= 1) {
    d.coeffs = {0.0};
    return d;
  }
  d.coeffs.resize(coeffs.size() - 1);
  for (size_t i = 1; i < coeffs.size(); ++i) d.coeffs[i - 1] = i * coeffs[i];
  return d;
}

bool Poly1D::is_constant() const {
  for (size_t i = 1; i < coeffs.size(); ++i)
    if (coeffs[i] != 0.0) return false;
  return true;
}

double TrigPoly1D::eval(double y) const {
  const double w = 2.0 * M_PI / period;
  double acc = a0;
  const size_t kc = cos_coeffs.size(), ks = sin_coeffs.size();
  for (size_t k = 0; k < std::max(kc, ks); ++k) {
    const double arg = w * (k + 1) * y;
    if (k < kc && cos_coeffs[k] != 0.0) acc += cos_coeffs[k] * std::cos(arg);
    if (k < ks && sin_coeffs[k] != 0.0) acc += sin_coeffs[k] * std::sin(arg);
  }
  return acc;
}

TrigPoly1D TrigPoly1D::derivative() const {
  const double w = 2.0 * M_PI / period;
  TrigPoly1D d;
  d.period = period;
  const size_t n = std::max(cos_coeffs.size(), sin_coeffs.size());
  d.cos_coeffs.assign(n, 0.0);
  d.sin_coeffs.assign(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const double wk = w * (k + 1);
    if (k < sin_coeffs.size()) d.cos_coeffs[k] = wk * sin_coeffs[k];
    if (k < cos_coeffs.size()) d.sin_coeffs[k] = -wk * cos_coeffs[k];
  }
  return d;
}

bool TrigPoly1D::is_constant() const {
  for (double v : cos_coeffs)
    if (v != 0.0) return false;
  for (double v : sin_coeffs)
    if (v != 0.0) return false;
  return true;
}

double CoefficientField::eval(double x, double y) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.in_x.eval(x) * t.in_y.eval(y);
  return acc;
}

double CoefficientField::d_dx(double x, double y) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.in_x.derivative().eval(x) * t.in_y.eval(y);
  return acc;
}

double CoefficientField::d_dy(double x, double y) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.in_x.eval(x) * t.in_y.derivative().eval(y);
  return acc;
}

bool CoefficientField::x_independent() const {
  for (const auto& t : terms)
    if (!t.in_x.is_constant()) return false;
  return true;
}

bool CoefficientField::y_independent() const {
  for (const auto& t : terms)
    if (!t.in_y.is_constant()) return false;
  return true;
}

double CoefficientField::period() const {
  return terms.empty() ? 1.0 : terms[0].in_y.period;
}

CoefficientField CoefficientField::constant(double c, double period) {
  CoefficientField f;
  f.terms.push_back({Poly1D::constant(c), TrigPoly1D::constant(1.0, period)});
  return f;
}

CoefficientField CoefficientField::of_x(const Poly1D& p, double period) {
  CoefficientField f;
  f.terms.push_back({p, TrigPoly1D::constant(1.0, period)});
  return f;
}

CoefficientField CoefficientField::of_y(const TrigPoly1D& t) {
  CoefficientField f;
  f.terms.push_back({Poly1D::constant(1.0), t});
  return f;
}

namespace {

void check_periodic(const CoefficientField& f, const char* name, double rho, double x_lo,
                    double x_hi) {
  for (int i = 0; i <= 8; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / 8.0;
    for (int j = 0; j <= 16; ++j) {
      const double y = rho * j / 16.0;
      const double v0 = f.eval(x, y);
      const double v1 = f.eval(x, y + rho);
      if (!std::isfinite(v0))
        throw InvariantError(std::string("coefficient ") + name + ": non-finite value");
      if (std::abs(v1 - v0) > 1e-10 * std::max(1.0, std::abs(v0)))
        throw InvariantError(std::string("coefficient ") + name + ": not period-rho in y");
    }
  }
}

}  // namespace

double PeriodicCoefficientSet::sigma_min(double x_lo, double x_hi) const {
  double mn = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 32; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / 32.0;
    for (int j = 0; j < 64; ++j) {
      const double y = period * j / 64.0;
      mn = std::min(mn, std::abs(sigma.eval(x, y)));
    }
  }
  return mn;
}

void PeriodicCoefficientSet::validate(double x_lo, double x_hi) const {
  if (dimension != 1) throw ConfigError("coefficient set: numerical solvers require dimension 1");
  if (!(period > 0.0)) throw ConfigError("coefficient set: period must be positive");
  if (gamma < 0.0) throw ConfigError("coefficient set: gamma must be nonnegative");
  check_periodic(b, "b", period, x_lo, x_hi);
  check_periodic(c, "c", period, x_lo, x_hi);
  check_periodic(sigma, "sigma", period, x_lo, x_hi);
  check_periodic(psi, "psi", period, x_lo, x_hi);
  if (sigma_min(x_lo, x_hi) < 1e-6)
    throw InvariantError("coefficient set: sigma is not uniformly nondegenerate");
}

}  // namespace msexit
