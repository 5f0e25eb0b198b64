#pragma once

#include <vector>

#include "msexit/torus.hpp"

namespace msexit {

// Dense row-major n x n matrix.
struct DenseMatrix {
  int n = 0;
  std::vector<double> a;

  explicit DenseMatrix(int n_ = 0) : n(n_), a(static_cast<size_t>(n_) * n_, 0.0) {}
  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  std::vector<double> apply(const std::vector<double>& x) const;
  double inf_norm() const;
};

// Fourier differentiation matrices on the periodic grid (n even): exact for
// trigonometric polynomials below the Nyquist mode.
DenseMatrix fourier_diff1(const TorusGrid& grid);
DenseMatrix fourier_diff2(const TorusGrid& grid);

// LU factorization with partial pivoting.
struct DenseLU {
  int n = 0;
  std::vector<double> lu;
  std::vector<int> piv;

  void factor(const DenseMatrix& A);
  std::vector<double> solve(std::vector<double> rhs) const;
};

// Periodic antiderivative of a (Lebesgue) zero-mean field via the discrete
// Fourier transform; returns the zero-mean primitive.
PeriodicField spectral_antiderivative(const PeriodicField& g);

}  // namespace msexit
