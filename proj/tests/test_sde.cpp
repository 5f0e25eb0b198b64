#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "msexit/common.hpp"
#include "msexit/flow.hpp"
#include "msexit/homogenize.hpp"
#include "msexit/rng.hpp"
#include "msexit/sde.hpp"

using namespace msexit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PeriodicCoefficientSet constant_set(double b, double c, double sigma) {
  PeriodicCoefficientSet s;
  s.b = CoefficientField::constant(b);
  s.c = CoefficientField::constant(c);
  s.sigma = CoefficientField::constant(sigma);
  s.psi = CoefficientField::constant(0.0);
  s.psi_limit = CoefficientField::constant(0.0);
  return s;
}

// gradient fast drift + linear slow drift + wobbly diffusion + constant psi:
// exercises every term of the step map
PeriodicCoefficientSet mixed_set() {
  TrigPoly1D Q;
  Q.cos_coeffs = {1.0};
  TrigPoly1D mQp = Q.derivative();
  for (auto& v : mQp.cos_coeffs) v = -v;
  for (auto& v : mQp.sin_coeffs) v = -v;

  PeriodicCoefficientSet s;
  s.b = CoefficientField::of_y(mQp);
  s.c = CoefficientField::of_x(Poly1D{{0.0, -1.0}});
  TrigPoly1D wobble = TrigPoly1D::constant(1.0);
  wobble.cos_coeffs = {0.3};
  s.sigma = CoefficientField::of_y(wobble);
  s.psi = CoefficientField::constant(0.4);
  s.psi_limit = CoefficientField::constant(0.4);
  return s;
}

// V = x^2/2, Q = cos(2 pi y), sigma = sqrt(2D)
PeriodicCoefficientSet langevin_set(double D) {
  TrigPoly1D Q;
  Q.cos_coeffs = {1.0};
  TrigPoly1D mQp = Q.derivative();
  for (auto& v : mQp.cos_coeffs) v = -v;
  for (auto& v : mQp.sin_coeffs) v = -v;

  PeriodicCoefficientSet s;
  s.b = CoefficientField::of_y(mQp);
  s.c = CoefficientField::of_x(Poly1D{{0.0, -1.0}});
  s.sigma = CoefficientField::constant(std::sqrt(2.0 * D));
  s.psi = CoefficientField::constant(0.0);
  s.psi_limit = CoefficientField::constant(0.0);
  return s;
}

// delta = eps/(1 + sqrt(eps)) is order one, so the dt cap is generous
RegimeClassification loose_regime() { return classify_regime(0.5, 0.5, 1.0, kInf, kInf); }

SimulationSpec make_spec(const PeriodicCoefficientSet& s, const RegimeClassification& r, double x0,
                         double dt, double horizon, std::uint64_t seed) {
  SimulationSpec spec;
  spec.coeffs = s;
  spec.regime = r;
  spec.x0 = x0;
  spec.dt = dt;
  spec.horizon = horizon;
  spec.seed = seed;
  return spec;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  return xs;
}

struct SimdGuard {
  ~SimdGuard() { set_simd_override(SimdMode::autodetect); }
};

}  // namespace

TEST_SUITE("sde") {
  TEST_CASE("zero fields give a constant path") {
    auto spec = make_spec(constant_set(0, 0, 0), loose_regime(), 0.7, 1.0 / 64, 1.0, 11);
    auto rec = simulate_path(spec);
    REQUIRE(rec.states.size() == 65);
    REQUIRE(rec.times.size() == 65);
    for (double v : rec.states) CHECK(v == 0.7);
    CHECK(rec.times.front() == 0.0);
    CHECK(rec.times.back() == 1.0);
    CHECK(!rec.exit.has_value());
  }

  TEST_CASE("unit drift integrates to state(t) = t exactly on a dyadic grid") {
    auto spec = make_spec(constant_set(0.0, 1.0, 0.0), loose_regime(), 0.0, 1.0 / 1024, 1.0, 3);
    auto rec = simulate_path(spec);
    REQUIRE(rec.states.size() == 1025);
    for (std::size_t k = 0; k < rec.states.size(); ++k) CHECK(rec.states[k] == rec.times[k]);
  }

  TEST_CASE("terminal second moment of pure noise matches eps * t") {
    auto regime = classify_regime(0.04, 1.25, kInf, kInf, kInf);
    auto spec = make_spec(constant_set(0.0, 0.0, 1.0), regime, 0.0, 1.0 / 2048, 1.0, 2024);
    const int n = 10000;
    std::vector<LaneOut> out(static_cast<std::size_t>(n));
    run_paths(spec, nullptr, n, 0, out.data());
    double m2 = 0.0;
    for (const auto& o : out) m2 += o.terminal * o.terminal;
    m2 /= n;
    const double want = 0.04;  // eps * horizon, exact for the euler chain
    const double band = 3.0 * want * std::sqrt(2.0 / n);
    CHECK(std::abs(m2 - want) <= band);
  }

  TEST_CASE("ensembles are reproducible and merge-invariant") {
    auto regime = classify_regime(0.05, 0.5, 1.0, 1.0, 1.0);
    auto spec = make_spec(mixed_set(), regime, 0.8, 1.0 / 2048, 0.125, 99);
    spec.xi.kind = InitialLaw::Kind::gaussian;
    spec.xi.value = 0.3;
    spec.xi.stddev = 1.0;

    const int n = 13;
    std::vector<LaneOut> whole(n), again(n), parts(n);
    run_paths(spec, nullptr, n, 0, whole.data());
    run_paths(spec, nullptr, n, 0, again.data());
    run_paths(spec, nullptr, 4, 0, parts.data());
    run_paths(spec, nullptr, 9, 4, parts.data() + 4);
    for (int i = 0; i < n; ++i) {
      REQUIRE(whole[i].terminal == again[i].terminal);
      REQUIRE(whole[i].terminal == parts[i].terminal);
    }

    auto one = simulate_path(spec, nullptr, 5);
    CHECK(one.states.back() == whole[5].terminal);
  }

  TEST_CASE("exit bookkeeping is invariant under ensemble partitioning") {
    auto regime = classify_regime(0.05, 0.5, 1.0, 1.0, kInf);
    auto spec = make_spec(mixed_set(), regime, 0.8, 1.0 / 2048, 0.125, 412);
    ExitProblemSpec exit;
    exit.lower = 0.7;
    exit.upper = 0.9;

    const int n = 13;
    std::vector<LaneOut> whole(n), parts(n);
    run_paths(spec, &exit, n, 0, whole.data());
    run_paths(spec, &exit, 6, 0, parts.data());
    run_paths(spec, &exit, 7, 6, parts.data() + 6);
    int exited = 0;
    for (int i = 0; i < n; ++i) {
      REQUIRE(whole[i].terminal == parts[i].terminal);
      REQUIRE(whole[i].tau == parts[i].tau);
      REQUIRE(whole[i].exit_state == parts[i].exit_state);
      REQUIRE(whole[i].exit_step == parts[i].exit_step);
      REQUIRE(whole[i].exited == parts[i].exited);
      REQUIRE(whole[i].at_upper == parts[i].at_upper);
      exited += whole[i].exited;
    }
    CHECK(exited >= 1);

    for (int i : {0, 7}) {
      auto rec = simulate_path(spec, &exit, static_cast<std::uint64_t>(i));
      CHECK(rec.exit.has_value() == (whole[i].exited != 0));
      if (rec.exit) {
        CHECK(rec.exit->tau == whole[i].tau);
        CHECK(rec.exit->exit_state == whole[i].exit_state);
        CHECK(rec.exit->exit_step == whole[i].exit_step);
      }
    }
  }

  TEST_CASE("scalar and avx2 engines produce identical results") {
    if (!avx2_available()) {
      MESSAGE("avx2 engine unavailable; skipping");
      return;
    }
    auto regime = classify_regime(0.05, 0.5, 1.0, 1.0, 1.0);
    auto spec = make_spec(mixed_set(), regime, 0.8, 1.0 / 2048, 0.125, 2718);
    spec.xi.kind = InitialLaw::Kind::gaussian;
    spec.xi.stddev = 0.5;
    ExitProblemSpec exit;
    exit.lower = 0.5;
    exit.upper = 1.1;

    SimdGuard guard;
    const int n = 13;
    std::vector<LaneOut> scal(n), vec(n);
    set_simd_override(SimdMode::force_scalar);
    run_paths(spec, &exit, n, 0, scal.data());
    auto rec_s = simulate_path(spec, &exit, 7);
    set_simd_override(SimdMode::force_avx2);
    run_paths(spec, &exit, n, 0, vec.data());
    auto rec_v = simulate_path(spec, &exit, 7);

    for (int i = 0; i < n; ++i) {
      REQUIRE(scal[i].terminal == vec[i].terminal);
      REQUIRE(scal[i].tau == vec[i].tau);
      REQUIRE(scal[i].exit_state == vec[i].exit_state);
      REQUIRE(scal[i].exit_step == vec[i].exit_step);
      REQUIRE(scal[i].exited == vec[i].exited);
      REQUIRE(scal[i].at_upper == vec[i].at_upper);
    }
    REQUIRE(rec_s.states == rec_v.states);
    REQUIRE(rec_s.times == rec_v.times);
    REQUIRE(rec_s.exit.has_value() == rec_v.exit.has_value());
    if (rec_s.exit) CHECK(rec_s.exit->tau == rec_v.exit->tau);
  }

  TEST_CASE("the step map matches a direct evaluation of the euler update") {
    auto s = mixed_set();
    auto regime = classify_regime(0.05, 0.5, 1.0, 1.0, kInf);
    auto spec = make_spec(s, regime, 0.8, 1.0 / 2048, 0.125, 77);

    SimdGuard guard;
    set_simd_override(SimdMode::force_scalar);
    auto rec = simulate_path(spec, nullptr, 3);

    const double eps = regime.epsilon;
    const double delta = regime.delta;
    const double fast = eps / delta;
    const double psis = std::pow(eps, 0.5 * regime.a1);
    const double noise_dt = std::sqrt(eps) * std::sqrt(spec.dt);
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < rec.states.size(); ++k) {
      double pair[2];
      detail::normal_probe_scalar(spec.seed, 0, k >> 1, 3, pair, 1);
      const double g = pair[k & 1];
      const double x = rec.states[k];
      const double y = x / delta;
      const double drift = fast * s.b.eval(x, y) + s.c.eval(x, y) + psis * s.psi.eval(x, y);
      const double xn = x + spec.dt * drift + s.sigma.eval(x, y) * g * noise_dt;
      worst = std::max(worst, std::abs(rec.states[k + 1] - xn));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("a deterministic unit ramp exits the upper boundary at tau = 1") {
    auto spec = make_spec(constant_set(0.0, 1.0, 0.0), loose_regime(), 0.0, 1.0 / 1024, 2.0, 5);
    ExitProblemSpec exit;
    auto rec = simulate_path(spec, &exit);
    REQUIRE(rec.exit.has_value());
    CHECK(rec.exit->tau == 1.0);
    CHECK(rec.exit->exit_state == 1.0);
    CHECK(rec.exit->at_upper);
    CHECK(rec.exit->exit_step == 1023);
    CHECK(rec.states.size() == 1025);
    CHECK(rec.states.back() == 1.0);
    CHECK(rec.times.back() == 1.0);
  }

  TEST_CASE("paths that never leave the interval carry no exit record") {
    auto spec = make_spec(constant_set(0, 0, 0), loose_regime(), 0.25, 1.0 / 64, 1.0, 5);
    ExitProblemSpec exit;
    auto rec = simulate_path(spec, &exit);
    CHECK(!rec.exit.has_value());
    CHECK(rec.states.size() == 65);
    CHECK(!detect_exit(rec, exit).has_value());
  }

  TEST_CASE("detect_exit reproduces the engine's crossing record bitwise") {
    auto regime = classify_regime(0.25, 1.25, kInf, kInf, kInf);
    auto spec = make_spec(constant_set(0.0, 0.0, 1.0), regime, 0.0, 1.0 / 4096, 4.0, 31);
    ExitProblemSpec exit;
    exit.lower = -0.2;
    exit.upper = 0.2;
    auto rec = simulate_path(spec, &exit);
    REQUIRE(rec.exit.has_value());
    auto found = detect_exit(rec, exit);
    REQUIRE(found.has_value());
    CHECK(found->tau == rec.exit->tau);
    CHECK(found->exit_state == rec.exit->exit_state);
    CHECK(found->at_upper == rec.exit->at_upper);
    CHECK(found->exit_step == rec.exit->exit_step);
  }

  TEST_CASE("hitting-time bias shrinks linearly with dt") {
    auto s = constant_set(0.0, 0.0, 0.0);
    s.c = CoefficientField::of_x(Poly1D{{1.0, 1.0}});  // dX = (1+X) dt crosses 1 at ln 2
    ExitProblemSpec exit;
    const double T = std::log(2.0);
    const double dts[2] = {1.0 / 256, 1.0 / 512};
    double bias[2];
    for (int i = 0; i < 2; ++i) {
      auto spec = make_spec(s, loose_regime(), 0.0, dts[i], 2.0, 7);
      auto rec = simulate_path(spec, &exit);
      REQUIRE(rec.exit.has_value());
      bias[i] = rec.exit->tau - T;
      CHECK(bias[i] > 0.0);
    }
    const double ratio = bias[0] / bias[1];
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.7);
  }

  TEST_CASE("validation rejects coarse dt, over-budget runs, and oversized recordings") {
    auto spec = make_spec(constant_set(0, 0, 0), loose_regime(), 0.0, 0.1, 1.0, 1);
    CHECK_THROWS_AS(spec.validate(), ConfigError);  // cap is rf*delta^2/eps ~ 0.017

    spec.dt = 1e-5;
    spec.horizon = 2000.0;  // 2e8 steps
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec.horizon = 100.0;  // 1e7 steps fit the budget but not a recording
    CHECK_THROWS_AS(simulate_path(spec), ConfigError);

    spec.dt = 1.0 / 64;
    spec.horizon = 1.0;
    spec.x0 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }

  TEST_CASE("cubic growth past the blow-up threshold raises a solver error") {
    auto s = constant_set(0.0, 0.0, 0.0);
    s.c = CoefficientField::of_x(Poly1D{{0.0, 0.0, 0.0, 1.0}});
    auto spec = make_spec(s, loose_regime(), 2.0, 1.0 / 128, 1.0, 1);
    CHECK_THROWS_AS(simulate_path(spec), SolverError);
    std::vector<LaneOut> out(4);
    CHECK_THROWS_AS(run_paths(spec, nullptr, 4, 0, out.data()), SolverError);
  }

  TEST_CASE("fluctuation extraction subtracts the effective path and rescales") {
    auto zero = [](double) { return 0.0; };
    auto traj = integrate_linearized_flow(zero, zero, 0.0, 1.0, 1.0 / 64);

    auto spec = make_spec(constant_set(0.0, 1.0, 0.0), loose_regime(), 0.0, 1.0 / 1024, 1.0, 9);
    auto rec = simulate_path(spec);
    auto eta = extract_fluctuation(rec, traj, 0.25);
    REQUIRE(eta.size() == rec.states.size());
    for (std::size_t k = 0; k < eta.size(); ++k) CHECK(eta[k] == rec.times[k] / 0.25);

    auto cspec = make_spec(constant_set(0, 0, 0), loose_regime(), 0.0, 1.0 / 64, 1.0, 9);
    auto crec = simulate_path(cspec);
    for (double v : extract_fluctuation(crec, traj, 0.5)) CHECK(v == 0.0);

    CHECK_THROWS_AS(extract_fluctuation(rec, traj, 0.0), ConfigError);
  }

  TEST_CASE("initial law sampling, moments, and eps^{a2/2} scaling") {
    InitialLaw law;
    CHECK(law.sample(1, 2) == 0.0);
    CHECK(law.mean() == 0.0);
    CHECK(law.variance() == 0.0);

    law.kind = InitialLaw::Kind::point;
    law.value = 0.4;
    CHECK(law.sample(1, 2) == 0.4);
    CHECK(law.variance() == 0.0);

    law.kind = InitialLaw::Kind::gaussian;
    law.stddev = 2.0;
    NormalStream ns{123, StreamClass::initial_draw};
    CHECK(law.sample(123, 17) == 0.4 + 2.0 * ns.normal(17, 0));

    law.stddev = -1.0;
    CHECK_THROWS_AS(law.validate(), ConfigError);
    law.stddev = 2.0;

    const int n = 40000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = law.sample(9, static_cast<std::uint64_t>(i));
      mean += v;
      m2 += v * v;
    }
    mean /= n;
    m2 = m2 / n - mean * mean;
    CHECK(std::abs(mean - 0.4) <= 4.0 * 2.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(m2 - 4.0) <= 4.0 * 4.0 * std::sqrt(2.0 / n));

    auto spec = make_spec(constant_set(0, 0, 0), classify_regime(0.25, 2.0, kInf, kInf, 1.0), 0.7,
                          1e-4, 0.01, 55);
    spec.xi = law;
    CHECK(spec.xi_scale() == 0.5);
    auto rec = simulate_path(spec, nullptr, 17);
    NormalStream draw{55, StreamClass::initial_draw};
    CHECK(rec.states.back() == 0.7 + 0.5 * (0.4 + 2.0 * draw.normal(17, 0)));

    spec.regime = classify_regime(0.25, 2.0, kInf, kInf, kInf);
    CHECK(spec.xi_scale() == 0.0);
    auto rec0 = simulate_path(spec, nullptr, 17);
    CHECK(rec0.states.back() == 0.7);
  }

  TEST_CASE("rescaled deviations from the effective flow stay tight as eps shrinks") {
    auto s = langevin_set(0.5);
    auto regime0 = classify_regime(0.1, 1.5, kInf, kInf, kInf);
    auto model =
        build_homogenized_model(s, regime0, uniform_grid(-0.5, 1.5, 13), TorusGrid{1.0, 128});
    auto traj = effective_flow(model, 1.0, 1.0, 1.0 / 512);

    std::vector<double> q95s;
    for (double eps : {0.1, 0.05, 0.025}) {
      auto regime = classify_regime(eps, 1.5, kInf, kInf, kInf);
      const double dt = 1.0 / std::ceil(1.0 / (0.09 * eps * eps));
      auto spec = make_spec(s, regime, 1.0, dt, 1.0, 404);
      std::vector<double> sups;
      for (int p = 0; p < 100; ++p) {
        auto rec = simulate_path(spec, nullptr, static_cast<std::uint64_t>(p));
        double sup = 0.0;
        for (std::size_t k = 0; k < rec.states.size(); ++k)
          sup = std::max(sup, std::abs(rec.states[k] - traj.state_at(rec.times[k])));
        sups.push_back(sup / regime.beta);
      }
      std::sort(sups.begin(), sups.end());
      q95s.push_back(sups[94]);
    }
    for (double q : q95s) {
      CAPTURE(q);
      CHECK(q < 6.0);
    }
    const auto [lo, hi] = std::minmax_element(q95s.begin(), q95s.end());
    CHECK(*hi / *lo < 2.5);
  }

  TEST_CASE("shared-noise euler refinements converge at strong order one half") {
    NormalStream ns{31415, StreamClass::path};
    auto drift = [](double x) { return -x; };
    auto diff = [](double x) { return 0.3 * (1.0 + 0.25 * x); };
    const int n9 = 512;
    const double dt9 = 1.0 / n9;
    double e78 = 0.0, e89 = 0.0;
    for (int p = 0; p < 400; ++p) {
      std::vector<double> w9(n9), w8(n9 / 2), w7(n9 / 4);
      for (int j = 0; j < n9; ++j)
        w9[static_cast<std::size_t>(j)] =
            std::sqrt(dt9) * ns.normal(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(j));
      for (int j = 0; j < n9 / 2; ++j) w8[j] = w9[2 * j] + w9[2 * j + 1];
      for (int j = 0; j < n9 / 4; ++j) w7[j] = w8[2 * j] + w8[2 * j + 1];
      auto em = [&](const std::vector<double>& w) {
        const double dt = 1.0 / static_cast<double>(w.size());
        double x = 1.0;
        for (double dw : w) x += dt * drift(x) + diff(x) * dw;
        return x;
      };
      const double x7 = em(w7), x8 = em(w8), x9 = em(w9);
      e78 += std::abs(x7 - x8);
      e89 += std::abs(x8 - x9);
    }
    const double ratio = e78 / e89;
    CAPTURE(ratio);
    CHECK(ratio > 1.1);
    CHECK(ratio < 1.9);
  }
}
