#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "msexit/spectral.hpp"
#include "msexit/torus.hpp"

using namespace msexit;

TEST_SUITE("spectral") {
  TEST_CASE("first derivative exact on resolved harmonics") {
    TorusGrid g{1.0, 32};
    auto D1 = fourier_diff1(g);
    auto f = sample_periodic(g, [](double y) {
      return std::sin(2 * M_PI * y) + 0.25 * std::cos(6 * M_PI * y);
    });
    auto df = D1.apply(f.values);
    for (int k = 0; k < g.n_points; ++k) {
      const double y = g.node(k);
      const double exact =
          2 * M_PI * std::cos(2 * M_PI * y) - 0.75 * M_PI * std::sin(6 * M_PI * y) * 2;
      CHECK(df[k] == doctest::Approx(exact).epsilon(1e-11));
    }
    auto cst = sample_periodic(g, [](double) { return 4.0; });
    for (double v : D1.apply(cst.values)) CHECK(std::abs(v) < 1e-12);
  }

  TEST_CASE("second derivative exact on resolved harmonics") {
    TorusGrid g{2.0, 48};  // non-unit period
    auto D2 = fourier_diff2(g);
    const double w = 2 * M_PI / 2.0;
    auto f = sample_periodic(g, [&](double y) { return std::sin(w * y); });
    auto d2f = D2.apply(f.values);
    for (int k = 0; k < g.n_points; ++k)
      CHECK(d2f[k] == doctest::Approx(-w * w * std::sin(w * g.node(k))).epsilon(1e-10));
  }

  TEST_CASE("spectral accuracy on analytic fields") {
    TorusGrid g{1.0, 64};
    auto D1 = fourier_diff1(g);
    auto f = sample_periodic(g, [](double y) { return std::exp(std::cos(2 * M_PI * y)); });
    auto df = D1.apply(f.values);
    for (int k = 0; k < g.n_points; ++k) {
      const double y = g.node(k);
      const double exact = -2 * M_PI * std::sin(2 * M_PI * y) * std::exp(std::cos(2 * M_PI * y));
      CHECK(df[k] == doctest::Approx(exact).epsilon(1e-11));
    }
  }

  TEST_CASE("odd grid sizes are rejected") {
    CHECK_THROWS_AS(fourier_diff1(TorusGrid{1.0, 31}), ConfigError);
    CHECK_THROWS_AS(fourier_diff2(TorusGrid{1.0, 9}), ConfigError);
  }

  TEST_CASE("dense LU solves random systems that force row pivoting") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
      const int n = 40;
      DenseMatrix A(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A.at(i, j) = U(rng);
      // no diagonal boost: generic dense matrices hit the pivot-swap path
      std::vector<double> x_true(n);
      for (auto& v : x_true) v = U(rng);
      auto b = A.apply(x_true);
      DenseLU lu;
      lu.factor(A);
      auto x = lu.solve(b);
      for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("dense LU handles a zero leading pivot") {
    DenseMatrix A(3);
    const double vals[9] = {0, 1, 2, 3, 0, 1, 1, 1, 0};
    for (int i = 0; i < 9; ++i) A.a[i] = vals[i];
    const std::vector<double> x_true = {1.0, -2.0, 0.5};
    auto b = A.apply(x_true);
    DenseLU lu;
    lu.factor(A);
    auto x = lu.solve(b);
    for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-13));
  }

  TEST_CASE("dense LU reports singularity") {
    DenseMatrix A(3);
    A.at(0, 0) = 1;
    A.at(0, 1) = 2;
    A.at(0, 2) = 3;
    for (int j = 0; j < 3; ++j) {
      A.at(1, j) = 2 * A.at(0, j);  // dependent row
      A.at(2, j) = j == 2 ? 1.0 : 0.0;
    }
    DenseLU lu;
    CHECK_THROWS_AS(lu.factor(A), SolverError);
  }

  TEST_CASE("spectral antiderivative inverts differentiation") {
    TorusGrid g{1.0, 64};
    auto gfun = sample_periodic(g, [](double y) { return std::cos(2 * M_PI * y); });
    auto P = spectral_antiderivative(gfun);
    for (int k = 0; k < g.n_points; ++k)
      CHECK(P.values[k] ==
            doctest::Approx(std::sin(2 * M_PI * g.node(k)) / (2 * M_PI)).epsilon(1e-12));

    // derivative of the primitive reproduces any resolved zero-mean input
    auto z = sample_periodic(g, [](double y) {
      return std::sin(4 * M_PI * y) - 0.7 * std::cos(2 * M_PI * y);
    });
    auto D1 = fourier_diff1(g);
    auto back = D1.apply(spectral_antiderivative(z).values);
    for (int k = 0; k < g.n_points; ++k)
      CHECK(back[k] == doctest::Approx(z.values[k]).epsilon(1e-10));
    CHECK(std::abs(cell_average(spectral_antiderivative(z))) < 1e-13);
  }
}
