#include "msexit/spectral.hpp"

#include <cmath>

namespace msexit {

std::vector<double> DenseMatrix::apply(const std::vector<double>& x) const {
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const double* row = a.data() + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

double DenseMatrix::inf_norm() const {
  double mx = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::abs(at(i, j));
    mx = std::max(mx, s);
  }
  return mx;
}

namespace {

void require_even(const TorusGrid& grid) {
  grid.validate();
  if (grid.n_points % 2 != 0)
    throw ConfigError("fourier differentiation: grid size must be even");
}

}  // namespace

DenseMatrix fourier_diff1(const TorusGrid& grid) {
  require_even(grid);
  const int n = grid.n_points;
  const double h = 2.0 * M_PI / n;
  const double scale = 2.0 * M_PI / grid.period;
  DenseMatrix D(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const int d = j - k;
      const double sgn = (d % 2 == 0) ? 1.0 : -1.0;
      D.at(j, k) = scale * 0.5 * sgn / std::tan(0.5 * d * h);
    }
  }
  return D;
}

DenseMatrix fourier_diff2(const TorusGrid& grid) {
  require_even(grid);
  const int n = grid.n_points;
  const double h = 2.0 * M_PI / n;
  const double scale2 = std::pow(2.0 * M_PI / grid.period, 2);
  DenseMatrix D(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) {
        D.at(j, k) = scale2 * (-M_PI * M_PI / (3.0 * h * h) - 1.0 / 6.0);
      } else {
        const int d = j - k;
        const double sgn = (d % 2 == 0) ? 1.0 : -1.0;
        const double s = std::sin(0.5 * d * h);
        D.at(j, k) = scale2 * (-sgn * 0.5 / (s * s));
      }
    }
  }
  return D;
}

void DenseLU::factor(const DenseMatrix& A) {
  n = A.n;
  lu = A.a;
  piv.assign(n, 0);
  double scale = 0.0;
  for (double v : lu) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw SolverError("lu: zero matrix");
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(lu[static_cast<size_t>(k) * n + k]);
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(lu[static_cast<size_t>(i) * n + k]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best < 1e-14 * scale) throw SolverError("lu: singular linear system");
    piv[k] = p;
    if (p != k)
      for (int j = 0; j < n; ++j)
        std::swap(lu[static_cast<size_t>(k) * n + j], lu[static_cast<size_t>(p) * n + j]);
    const double inv_pivot = 1.0 / lu[static_cast<size_t>(k) * n + k];
    for (int i = k + 1; i < n; ++i) {
      const double m = lu[static_cast<size_t>(i) * n + k] * inv_pivot;
      lu[static_cast<size_t>(i) * n + k] = m;
      if (m == 0.0) continue;
      const double* rk = lu.data() + static_cast<size_t>(k) * n;
      double* ri = lu.data() + static_cast<size_t>(i) * n;
      for (int j = k + 1; j < n; ++j) ri[j] -= m * rk[j];
    }
  }
}

std::vector<double> DenseLU::solve(std::vector<double> rhs) const {
  if (static_cast<int>(rhs.size()) != n) throw SolverError("lu: rhs size mismatch");
  // factor() swaps whole rows, multipliers included, so the stored L refers to
  // fully permuted row order: permute the rhs up front, not interleaved.
  for (int k = 0; k < n; ++k)
    if (piv[k] != k) std::swap(rhs[k], rhs[piv[k]]);
  for (int k = 0; k < n; ++k)
    for (int i = k + 1; i < n; ++i) rhs[i] -= lu[static_cast<size_t>(i) * n + k] * rhs[k];
  for (int i = n - 1; i >= 0; --i) {
    const double* ri = lu.data() + static_cast<size_t>(i) * n;
    double acc = rhs[i];
    for (int j = i + 1; j < n; ++j) acc -= ri[j] * rhs[j];
    rhs[i] = acc / ri[i];
  }
  return rhs;
}

PeriodicField spectral_antiderivative(const PeriodicField& g) {
  g.validate();
  const int n = g.grid.n_points;
  if (n % 2 != 0) throw ConfigError("spectral antiderivative: grid size must be even");
  const double w = 2.0 * M_PI / n;
  const double base = g.grid.period / (2.0 * M_PI);
  // direct O(n^2) DFT; grid sizes here are a few hundred
  std::vector<double> re(n / 2 + 1, 0.0), im(n / 2 + 1, 0.0);
  for (int k = 0; k <= n / 2; ++k) {
    double cr = 0.0, ci = 0.0;
    for (int j = 0; j < n; ++j) {
      cr += g.values[j] * std::cos(w * k * j);
      ci -= g.values[j] * std::sin(w * k * j);
    }
    re[k] = cr / n;
    im[k] = ci / n;
  }
  PeriodicField out;
  out.grid = g.grid;
  out.values.assign(n, 0.0);
  // primitive of e^{i 2 pi k y / rho} is the same mode divided by i 2 pi k / rho;
  // mode 0 must be (numerically) absent, the Nyquist mode is dropped
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int k = 1; k < n / 2; ++k) {
      const double cr = re[k] / k * base, ci = im[k] / k * base;
      // 2 * Re[ (c / (i k w')) e^{i k w j} ] with c = cr + i ci
      acc += 2.0 * (ci * std::cos(w * k * j) + cr * std::sin(w * k * j));
    }
    out.values[j] = acc;
  }
  return out;
}

}  // namespace msexit
