#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "msexit/homogenize.hpp"
#include "msexit/spectral.hpp"
#include "oracles.hpp"

using namespace msexit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// V(x) = x^2/2, Q(y) = cos(2 pi y), sigma = sqrt(2D)
PeriodicCoefficientSet langevin_set(double D) {
  TrigPoly1D Q;
  Q.cos_coeffs = {1.0};
  PeriodicCoefficientSet s;
  s.period = 1.0;
  TrigPoly1D mQp = Q.derivative();
  for (auto& v : mQp.cos_coeffs) v = -v;
  for (auto& v : mQp.sin_coeffs) v = -v;
  s.b = CoefficientField::of_y(mQp);
  s.c = CoefficientField::of_x(Poly1D{{0.0, -1.0}});  // -V'(x) = -x
  s.sigma = CoefficientField::constant(std::sqrt(2.0 * D));
  s.psi = CoefficientField::constant(0.0);
  s.psi_limit = CoefficientField::constant(0.0);
  return s;
}

double Qcos(double y) { return std::cos(2 * M_PI * y); }

}  // namespace

TEST_SUITE("homogenize") {
  TEST_CASE("invariant measure: gradient drift gives the Gibbs density") {
    for (double D : {0.5, 1.0}) {
      auto s = langevin_set(D);
      TorusGrid g{1.0, 512};
      auto mu = invariant_measure(s, 1, 0.3, g);
      const double K =
          oracles::refined_quadrature([&](double y) { return std::exp(-Qcos(y) / D); }, 0, 1);
      double max_err = 0.0;
      for (int k = 0; k < g.n_points; ++k) {
        const double want = std::exp(-Qcos(g.node(k)) / D) / K;
        max_err = std::max(max_err, std::abs(mu.values[k] - want));
      }
      CHECK(max_err < 1e-8);
      CHECK(std::abs(cell_average(mu) * g.period - 1.0) < 1e-10);
    }
  }

  TEST_CASE("invariant measure: flat drift gives the uniform density") {
    PeriodicCoefficientSet s = langevin_set(1.0);
    s.b = CoefficientField::constant(0.0);
    TorusGrid g{1.0, 64};
    auto mu = invariant_measure(s, 1, 0.0, g);
    for (double v : mu.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("invariant measure: matched regime at gamma 0 is the occupation density") {
    PeriodicCoefficientSet s;
    s.period = 1.0;
    s.gamma = 0.0;
    s.b = CoefficientField::constant(0.0);
    TrigPoly1D cfun;
    cfun.a0 = 2.0;
    cfun.sin_coeffs = {1.0};
    s.c = CoefficientField::of_y(cfun);  // c(y) = 2 + sin(2 pi y) > 0
    s.sigma = CoefficientField::constant(1.0);
    s.psi = CoefficientField::constant(0.0);
    s.psi_limit = CoefficientField::constant(0.0);

    TorusGrid g{1.0, 256};
    auto mu = invariant_measure(s, 2, 0.0, g);

    // against the independent long-run occupation histogram of dy/dt = c(y)
    auto cval = [](double y) { return 2.0 + std::sin(2 * M_PI * y); };
    const int bins = 32;
    auto hist = oracles::occupation_density(cval, 1.0, bins);
    for (int bb = 0; bb < bins; ++bb) {
      const double yc = (bb + 0.5) / bins;
      CHECK(mu.eval(yc) == doctest::Approx(hist[bb]).epsilon(2e-2));
    }

    // and against the closed form 1/c normalized
    const double Z = oracles::refined_quadrature([&](double y) { return 1.0 / cval(y); }, 0, 1);
    for (int k = 0; k < g.n_points; ++k)
      CHECK(mu.values[k] == doctest::Approx(1.0 / (cval(g.node(k)) * Z)).epsilon(1e-10));

    // sign change in c is a precondition error
    TrigPoly1D bad;
    bad.a0 = 0.5;
    bad.sin_coeffs = {1.0};
    s.c = CoefficientField::of_y(bad);
    CHECK_THROWS_AS(invariant_measure(s, 2, 0.0, g), ConfigError);
  }

  TEST_CASE("centering residuals") {
    auto s = langevin_set(0.5);
    TorusGrid g{1.0, 256};
    auto mu = invariant_measure(s, 1, 0.0, g);
    CHECK(std::abs(check_centering(s, 0.0, mu)) < 1e-10);  // gradient drift is centered

    PeriodicCoefficientSet flat = s;
    flat.b = CoefficientField::constant(1.0);
    auto uni = invariant_measure(flat, 1, 0.0, g);
    CHECK(check_centering(flat, 0.0, uni) == doctest::Approx(1.0).epsilon(1e-10));

    TrigPoly1D cosy;
    cosy.cos_coeffs = {1.0};
    PeriodicCoefficientSet codr = s;
    codr.b = CoefficientField::of_y(cosy);
    PeriodicField uniform;
    uniform.grid = g;
    uniform.values.assign(g.n_points, 1.0);
    CHECK(std::abs(check_centering(codr, 0.0, uniform)) < 1e-10);
  }

  TEST_CASE("cell problem: corrector identity for the gradient model") {
    for (double D : {0.5, 1.0}) {
      auto s = langevin_set(D);
      TorusGrid g{1.0, 512};
      auto mu = invariant_measure(s, 1, 0.0, g);
      double res = 0.0;
      auto chi = solve_cell_problem(s, 0.0, mu, g, &res);
      CHECK(res < 1e-8);

      const double Khat =
          oracles::refined_quadrature([&](double y) { return std::exp(Qcos(y) / D); }, 0, 1);
      auto chip = fourier_diff1(g).apply(chi.values);
      double max_err = 0.0;
      for (int k = 0; k < g.n_points; ++k) {
        const double want = std::exp(Qcos(g.node(k)) / D) / Khat;  // rho = 1
        max_err = std::max(max_err, std::abs(1.0 + chip[k] - want));
      }
      CHECK(max_err < 1e-6);

      double mean = 0.0;
      for (int k = 0; k < g.n_points; ++k) mean += chi.values[k] * mu.values[k];
      CHECK(std::abs(mean * g.spacing()) < 1e-8);
    }
  }

  TEST_CASE("cell problem: trivial right-hand side and unsolvable guard") {
    auto s = langevin_set(1.0);
    s.b = CoefficientField::constant(0.0);
    TorusGrid g{1.0, 64};
    auto mu = invariant_measure(s, 1, 0.0, g);
    auto chi = solve_cell_problem(s, 0.0, mu, g);
    for (double v : chi.values) CHECK(std::abs(v) < 1e-12);

    s.b = CoefficientField::constant(1.0);  // uncentered drift
    auto uni = invariant_measure(s, 1, 0.0, g);
    CHECK_THROWS_AS(solve_cell_problem(s, 0.0, uni, g), InvariantError);
  }

  TEST_CASE("cell problem: error decays rapidly under grid refinement") {
    const double D = 0.5;
    auto s = langevin_set(D);
    const double Khat =
        oracles::refined_quadrature([&](double y) { return std::exp(Qcos(y) / D); }, 0, 1);
    auto err_at = [&](int n) {
      TorusGrid g{1.0, n};
      auto mu = invariant_measure(s, 1, 0.0, g);
      auto chi = solve_cell_problem(s, 0.0, mu, g);
      auto chip = fourier_diff1(g).apply(chi.values);
      double e = 0.0;
      for (int k = 0; k < n; ++k)
        e = std::max(e, std::abs(1.0 + chip[k] - std::exp(Qcos(g.node(k)) / D) / Khat));
      return e;
    };
    const double coarse = err_at(16), fine = err_at(32);
    CHECK((coarse / fine > 3.0 || fine < 1e-12));
  }

  TEST_CASE("auxiliary problem: constant lambda gives zero corrector") {
    PeriodicCoefficientSet s;
    s.period = 1.0;
    s.gamma = 1.0;
    s.b = CoefficientField::constant(0.0);
    s.c = CoefficientField::constant(1.0);
    s.sigma = CoefficientField::constant(1.0);
    s.psi = CoefficientField::constant(0.0);
    s.psi_limit = CoefficientField::constant(0.0);
    TorusGrid g{1.0, 64};
    auto mu = invariant_measure(s, 2, 0.0, g);
    double res = 0.0;
    auto xi = solve_auxiliary_pde(s, 2, 0.0, mu, g, &res);
    CHECK(res < 1e-12);
    for (double v : xi.values) CHECK(std::abs(v) < 1e-12);
  }

  TEST_CASE("auxiliary problem: gradient model has a nontrivial centered corrector") {
    auto s = langevin_set(0.5);
    TorusGrid g{1.0, 512};
    const double x = 1.0;  // V'(x) = 1
    auto mu = invariant_measure(s, 1, x, g);
    double res = 0.0;
    auto xi = solve_auxiliary_pde(s, 1, x, mu, g, &res);
    CHECK(res < 1e-8);
    double mean = 0.0, linf = 0.0;
    for (int k = 0; k < g.n_points; ++k) {
      mean += xi.values[k] * mu.values[k];
      linf = std::max(linf, std::abs(xi.values[k]));
    }
    CHECK(std::abs(mean * g.spacing()) < 1e-8);
    CHECK(linf > 1e-3);  // genuinely nonzero
  }

  TEST_CASE("averaged coefficients: flat oscillation reduces to the slow model") {
    auto s = langevin_set(1.0);
    s.b = CoefficientField::constant(0.0);  // Q = 0
    TorusGrid g{1.0, 64};
    for (double x : {-1.0, 0.4, 2.0}) {
      auto avg = averaged_coefficients(s, 1, x, g);
      CHECK(avg.lambda_bar == doctest::Approx(-x).epsilon(1e-10));
      CHECK(avg.q_bar == doctest::Approx(2.0).epsilon(1e-10));
      CHECK(std::abs(avg.J_bar) < 1e-10);
      CHECK(std::abs(avg.Psi_bar) < 1e-12);
    }
  }

  TEST_CASE("averaged coefficients: effective drift identity for the gradient model") {
    for (double D : {0.5, 1.0}) {
      auto s = langevin_set(D);
      TorusGrid g{1.0, 512};
      const double K =
          oracles::refined_quadrature([&](double y) { return std::exp(-Qcos(y) / D); }, 0, 1);
      const double Khat =
          oracles::refined_quadrature([&](double y) { return std::exp(Qcos(y) / D); }, 0, 1);
      CHECK(K == doctest::Approx(std::cyl_bessel_i(0.0, 1.0 / D)).epsilon(1e-10));
      for (int i = 0; i < 20; ++i) {
        const double x = -2.0 + 4.0 * i / 19.0;
        auto avg = averaged_coefficients(s, 1, x, g);
        const double lam_want = -x / (K * Khat);  // rho = 1
        CHECK(std::abs(avg.lambda_bar - lam_want) < 1e-8 * std::max(1.0, std::abs(lam_want)));
        CHECK(avg.q_bar == doctest::Approx(2.0 * D / (K * Khat)).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("averaged coefficients: extra drift matches the nested-integral oracle") {
    const double D = 0.5;
    auto s = langevin_set(D);
    TorusGrid g{1.0, 512};
    for (double x : {0.5, 1.0, 2.0}) {
      auto avg = averaged_coefficients(s, 1, x, g);
      const double want = oracles::gradient_model_extra_drift(Qcos, D, 1.0, x);
      CHECK(std::abs(avg.J_bar - want) < 1e-6 * std::max(1.0, std::abs(want)));
    }
  }

  TEST_CASE("averaged coefficients: matched regime at gamma 0 gives the harmonic mean") {
    PeriodicCoefficientSet s;
    s.period = 1.0;
    s.gamma = 0.0;
    s.b = CoefficientField::constant(0.0);
    TrigPoly1D cfun;
    cfun.a0 = 2.0;
    cfun.sin_coeffs = {1.0};
    s.c = CoefficientField::of_y(cfun);
    s.sigma = CoefficientField::constant(1.0);
    s.psi = CoefficientField::constant(0.0);
    s.psi_limit = CoefficientField::constant(0.0);
    TorusGrid g{1.0, 256};
    auto avg = averaged_coefficients(s, 2, 0.0, g);
    const double Z =
        oracles::refined_quadrature([](double y) { return 1.0 / (2.0 + std::sin(2 * M_PI * y)); },
                                    0, 1);
    CHECK(avg.lambda_bar == doctest::Approx(1.0 / Z).epsilon(1e-10));
    CHECK(avg.lambda_bar == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));
  }

  TEST_CASE("homogenized model: tabulation, splines, caching and guards") {
    auto s = langevin_set(0.5);
    auto regime = classify_regime(0.02, 2.0, kInf, kInf, kInf);
    std::vector<double> xg;
    for (int i = 0; i <= 16; ++i) xg.push_back(-2.0 + 4.0 * i / 16.0);
    auto model = build_homogenized_model(s, regime, xg, TorusGrid{1.0, 256});

    CHECK(model.worst.cell_residual < 1e-8);
    CHECK(model.worst.aux_residual < 1e-8);
    CHECK(model.worst.mu_normalization < 1e-10);
    CHECK(model.worst.mu_min > 0.0);

    // spline agrees with a direct solve off the tabulation nodes
    const double x_test = 0.7123;
    auto direct = averaged_coefficients(s, 1, x_test, model.fast_grid);
    CHECK(model.lambda_bar(x_test) == doctest::Approx(direct.lambda_bar).epsilon(1e-9));
    CHECK(model.q_bar(x_test) == doctest::Approx(direct.q_bar).epsilon(1e-9));
    CHECK(model.J_bar(x_test) == doctest::Approx(direct.J_bar).epsilon(1e-7));
    CHECK(model.dlambda_bar(x_test) ==
          doctest::Approx(direct.lambda_bar / x_test).epsilon(1e-8));  // linear in x

    // pointwise integrand consistency: mu-average of the tabulated lambda field
    const auto& mu = model.mu_field(xg[3]);
    double acc = 0.0;
    for (int k = 0; k < mu.grid.n_points; ++k)
      acc += model.lambda_y_tab[3].values[k] * mu.values[k];
    CHECK(acc * mu.grid.spacing() == doctest::Approx(model.lambda_tab[3]).epsilon(1e-10));

    // uncentered drift must be rejected with the invariant error
    auto bad = s;
    bad.b = CoefficientField::constant(1.0);
    CHECK_THROWS_AS(build_homogenized_model(bad, regime, xg, TorusGrid{1.0, 64}),
                    InvariantError);
  }
}
