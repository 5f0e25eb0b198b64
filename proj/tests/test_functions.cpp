#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "msexit/functions.hpp"

using namespace msexit;

namespace {

// V(x) = x^2/2, Q(y) = cos(2 pi y), sigma = sqrt(2 D): the gradient-drift
// model used throughout the tests.
PeriodicCoefficientSet langevin_set(double D) {
  TrigPoly1D Q;
  Q.cos_coeffs = {1.0};
  Poly1D V{{0.0, 0.0, 0.5}};
  PeriodicCoefficientSet s;
  s.period = 1.0;
  TrigPoly1D minus_Qp = Q.derivative();
  for (auto& v : minus_Qp.cos_coeffs) v = -v;
  for (auto& v : minus_Qp.sin_coeffs) v = -v;
  s.b = CoefficientField::of_y(minus_Qp);
  Poly1D minus_Vp = V.derivative();
  for (auto& v : minus_Vp.coeffs) v = -v;
  s.c = CoefficientField::of_x(minus_Vp);
  s.sigma = CoefficientField::constant(std::sqrt(2.0 * D));
  s.psi = CoefficientField::constant(0.0);
  s.psi_limit = CoefficientField::constant(0.0);
  return s;
}

}  // namespace

TEST_SUITE("functions") {
  TEST_CASE("polynomial evaluation and derivative") {
    Poly1D p{{1.0, -2.0, 0.0, 3.0}};  // 1 - 2x + 3x^3
    CHECK(p.eval(0.0) == 1.0);
    CHECK(p.eval(2.0) == doctest::Approx(1 - 4 + 24));
    auto d = p.derivative();  // -2 + 9x^2
    CHECK(d.eval(0.0) == -2.0);
    CHECK(d.eval(2.0) == doctest::Approx(-2 + 36));
    CHECK(Poly1D::constant(4.0).is_constant());
    CHECK(!p.is_constant());
    CHECK(Poly1D{{}}.eval(1.0) == 0.0);
  }

  TEST_CASE("trig polynomial evaluation and derivative") {
    TrigPoly1D t;
    t.period = 1.0;
    t.a0 = 0.5;
    t.cos_coeffs = {1.0, 0.0};
    t.sin_coeffs = {0.0, -0.25};
    auto val = [&](double y) {
      return 0.5 + std::cos(2 * M_PI * y) - 0.25 * std::sin(4 * M_PI * y);
    };
    auto dval = [&](double y) {
      return -2 * M_PI * std::sin(2 * M_PI * y) - M_PI * std::cos(4 * M_PI * y);
    };
    for (double y : {0.0, 0.13, 0.5, 0.77}) {
      CHECK(t.eval(y) == doctest::Approx(val(y)).epsilon(1e-14));
      CHECK(t.derivative().eval(y) == doctest::Approx(dval(y)).epsilon(1e-13));
    }
    CHECK(TrigPoly1D::constant(2.0).is_constant());
    CHECK(!t.is_constant());
  }

  TEST_CASE("trig polynomial with non-unit period") {
    TrigPoly1D t;
    t.period = 2.0;
    t.cos_coeffs = {1.0};
    CHECK(t.eval(0.0) == doctest::Approx(1.0));
    CHECK(t.eval(1.0) == doctest::Approx(-1.0));
    CHECK(t.eval(2.0) == doctest::Approx(1.0));
  }

  TEST_CASE("coefficient field evaluation and partials") {
    // f(x,y) = (1 + x^2) cos(2 pi y) + 2x
    CoefficientField f;
    TrigPoly1D cosy;
    cosy.cos_coeffs = {1.0};
    f.terms.push_back({Poly1D{{1.0, 0.0, 1.0}}, cosy});
    f.terms.push_back({Poly1D{{0.0, 2.0}}, TrigPoly1D::constant(1.0)});
    const double x = 0.7, y = 0.23;
    const double c = std::cos(2 * M_PI * y), s = std::sin(2 * M_PI * y);
    CHECK(f.eval(x, y) == doctest::Approx((1 + x * x) * c + 2 * x).epsilon(1e-14));
    CHECK(f.d_dx(x, y) == doctest::Approx(2 * x * c + 2).epsilon(1e-14));
    CHECK(f.d_dy(x, y) == doctest::Approx(-(1 + x * x) * 2 * M_PI * s).epsilon(1e-13));
    CHECK(!f.x_independent());
    CHECK(!f.y_independent());
    CHECK(CoefficientField::constant(3.0).x_independent());
    CHECK(CoefficientField::constant(3.0).y_independent());
    CHECK(CoefficientField::of_y(cosy).x_independent());
    CHECK(CoefficientField::of_x(Poly1D{{0.0, 1.0}}).y_independent());
  }

  TEST_CASE("coefficient set validation accepts the gradient-drift model") {
    auto s = langevin_set(0.5);
    CHECK_NOTHROW(s.validate(-2.0, 2.0));
    CHECK(s.sigma_min(-2.0, 2.0) == doctest::Approx(1.0));
    CHECK(s.b.x_independent());
    CHECK(s.c.y_independent());
  }

  TEST_CASE("degenerate diffusion is rejected") {
    auto s = langevin_set(1.0);
    s.sigma = CoefficientField::constant(0.0);
    CHECK_THROWS_AS(s.validate(-1.0, 1.0), InvariantError);
    TrigPoly1D siny;  // sigma = sin(2 pi y) vanishes on the torus
    siny.sin_coeffs = {1.0};
    s.sigma = CoefficientField::of_y(siny);
    CHECK_THROWS_AS(s.validate(-1.0, 1.0), InvariantError);
  }

  TEST_CASE("dimension and parameter guards") {
    auto s = langevin_set(1.0);
    s.dimension = 2;
    CHECK_THROWS_AS(s.validate(-1.0, 1.0), ConfigError);
    s = langevin_set(1.0);
    s.gamma = -0.5;
    CHECK_THROWS_AS(s.validate(-1.0, 1.0), ConfigError);
  }
}
