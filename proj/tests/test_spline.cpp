#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "msexit/common.hpp"
#include "msexit/spline.hpp"

using namespace msexit;

TEST_SUITE("spline") {
  TEST_CASE("not-a-knot reproduces cubics exactly") {
    auto f = [](double x) { return x * x * x - 2 * x * x + x - 0.5; };
    auto fp = [](double x) { return 3 * x * x - 4 * x + 1; };
    std::vector<double> xs, ys;
    for (int i = 0; i <= 6; ++i) {
      xs.push_back(i * 0.8);
      ys.push_back(f(xs.back()));
    }
    CubicSpline s;
    s.build(xs, ys);
    for (double t : {0.1, 1.234, 2.0, 3.7, 4.79}) {
      CHECK(s.eval(t) == doctest::Approx(f(t)).epsilon(1e-12));
      CHECK(s.deriv(t) == doctest::Approx(fp(t)).epsilon(1e-11));
    }
  }

  TEST_CASE("two and three point degenerate cases") {
    CubicSpline lin;
    lin.build({0.0, 2.0}, {1.0, 5.0});
    CHECK(lin.eval(0.5) == doctest::Approx(2.0));
    CHECK(lin.deriv(1.7) == doctest::Approx(2.0));

    // three points determine a parabola
    auto q = [](double x) { return 2 * x * x - x + 3; };
    CubicSpline par;
    par.build({0.0, 1.0, 3.0}, {q(0), q(1), q(3)});
    CHECK(par.eval(2.0) == doctest::Approx(q(2.0)).epsilon(1e-12));
    CHECK(par.deriv(0.5) == doctest::Approx(4 * 0.5 - 1).epsilon(1e-12));
  }

  TEST_CASE("approximation of a smooth function") {
    std::vector<double> xs, ys;
    const int n = 21;
    for (int i = 0; i < n; ++i) {
      xs.push_back(M_PI * i / (n - 1));
      ys.push_back(std::sin(xs.back()));
    }
    CubicSpline s;
    s.build(xs, ys);
    double max_err = 0.0, max_derr = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double t = M_PI * i / 200.0;
      max_err = std::max(max_err, std::abs(s.eval(t) - std::sin(t)));
      max_derr = std::max(max_derr, std::abs(s.deriv(t) - std::cos(t)));
    }
    CHECK(max_err < 1e-5);
    CHECK(max_derr < 1e-3);
  }

  TEST_CASE("guards") {
    CubicSpline s;
    CHECK_THROWS_AS(s.build({0.0, 0.0, 1.0}, {1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(s.build({0.0}, {1.0}), ConfigError);
    s.build({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0});
    CHECK_THROWS_AS(s.eval(-0.5), SolverError);
    CHECK_THROWS_AS(s.eval(2.5), SolverError);
    CHECK_NOTHROW(s.eval(2.0));
  }
}
