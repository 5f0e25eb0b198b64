#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "msexit/engine.hpp"
#include "msexit/kernels.hpp"
#include "msexit/rng.hpp"

using namespace msexit;

namespace {

using SK = Kernels<ScalarBackend>;

double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("templated philox agrees with the reference implementation") {
    auto check = [](std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
      std::uint64_t c[4] = {ctr[0], ctr[1], ctr[2], ctr[3]};
      SK::philox(c, key[0], key[1]);
      const auto want = philox4x32(ctr, key);
      for (int i = 0; i < 4; ++i) CHECK(c[i] == want[i]);
    };
    check({0, 0, 0, 0}, {0, 0});
    check({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    check({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i)
      check({rng(), rng(), rng(), rng()}, {rng(), rng()});
  }

  TEST_CASE("kernel log matches libm to a few ulps") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
      double x;
      const int band = i % 4;
      if (band == 0)
        x = U(rng);  // uniforms, the hot case
      else if (band == 1)
        x = 1.0 + U(rng) * 1e-3;  // near one
      else if (band == 2)
        x = std::ldexp(0.5 + 0.5 * U(rng), static_cast<int>(U(rng) * 80) - 40);
      else
        x = 0x1p-52 * (0.5 + U(rng));  // smallest engine uniforms
      if (x <= 0.0) continue;
      worst = std::max(worst, rel_err(SK::log(x), std::log(x)));
    }
    CHECK(worst < 5e-15);
  }

  TEST_CASE("kernel exp matches libm to a few ulps") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-40.0, 40.0);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double x = U(rng);
      worst = std::max(worst, rel_err(SK::exp(x), std::exp(x)));
    }
    CHECK(worst < 5e-15);
    CHECK(SK::exp(0.0) == 1.0);
    CHECK(rel_err(SK::exp(300.0), std::exp(300.0)) < 5e-15);
    CHECK(rel_err(SK::exp(-300.0), std::exp(-300.0)) < 5e-15);
  }

  TEST_CASE("kernel sincos2pi matches libm and the circle identity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0, worst_circle = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double t = U(rng);
      double s, c;
      SK::sincos2pi(t, s, c);
      worst = std::max({worst, std::abs(s - std::sin(2 * M_PI * t)),
                        std::abs(c - std::cos(2 * M_PI * t))});
      worst_circle = std::max(worst_circle, std::abs(s * s + c * c - 1.0));
    }
    CHECK(worst < 4e-15);
    CHECK(worst_circle < 4e-16);
    // quadrant boundaries
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.125, 0.375, 0.625, 0.875, 0.999999}) {
      double s, c;
      SK::sincos2pi(t, s, c);
      CHECK(std::abs(s - std::sin(2 * M_PI * t)) < 4e-15);
      CHECK(std::abs(c - std::cos(2 * M_PI * t)) < 4e-15);
    }
  }

  TEST_CASE("normal pairs have the right joint moments") {
    const int n_pairs = 50000;
    std::vector<double> out(2 * n_pairs);
    detail::normal_probe_scalar(91, 0, 0, 0, out.data(), n_pairs);
    double s0 = 0, s1 = 0, v0 = 0, v1 = 0, cross = 0;
    for (int i = 0; i < n_pairs; ++i) {
      s0 += out[2 * i];
      s1 += out[2 * i + 1];
      v0 += out[2 * i] * out[2 * i];
      v1 += out[2 * i + 1] * out[2 * i + 1];
      cross += out[2 * i] * out[2 * i + 1];
    }
    const double inv = 1.0 / n_pairs;
    const double sd = 4.0 / std::sqrt(static_cast<double>(n_pairs));
    CHECK(std::abs(s0 * inv) < sd);
    CHECK(std::abs(s1 * inv) < sd);
    CHECK(std::abs(v0 * inv - 1.0) < sd * std::sqrt(2.0));
    CHECK(std::abs(v1 * inv - 1.0) < sd * std::sqrt(2.0));
    CHECK(std::abs(cross * inv) < sd);
  }

  TEST_CASE("avx2 kernels are bit-identical to scalar ones") {
    if (!avx2_available()) {
      MESSAGE("avx2 engine not available; skipping equivalence check");
      return;
    }
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int n = 4097;  // odd tail exercises the ragged batch
    std::vector<double> in(n), a(n), b(n);
    for (int mode = 0; mode < 4; ++mode) {
      for (int i = 0; i < n; ++i) {
        if (mode == 0)
          in[i] = std::ldexp(U(rng) + 1e-12, static_cast<int>(U(rng) * 40) - 20);
        else if (mode == 1)
          in[i] = (U(rng) - 0.5) * 60.0;
        else
          in[i] = U(rng);
      }
      detail::kernel_probe_scalar(mode, in.data(), a.data(), n);
      detail::kernel_probe_avx2(mode, in.data(), b.data(), n);
      for (int i = 0; i < n; ++i) REQUIRE(a[i] == b[i]);
    }
  }

  TEST_CASE("avx2 normal pairs are bit-identical to scalar ones") {
    if (!avx2_available()) {
      MESSAGE("avx2 engine not available; skipping equivalence check");
      return;
    }
    const int n_pairs = 1001;
    std::vector<double> a(2 * n_pairs), b(2 * n_pairs);
    for (std::uint64_t block : {0ull, 7ull, 123456789ull}) {
      detail::normal_probe_scalar(2024, 0, block, 17, a.data(), n_pairs);
      detail::normal_probe_avx2(2024, 0, block, 17, b.data(), n_pairs);
      for (int i = 0; i < 2 * n_pairs; ++i) REQUIRE(a[i] == b[i]);
    }
  }
}
