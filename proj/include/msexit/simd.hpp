#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define MSEXIT_AVX2_BACKEND 1
#endif

namespace msexit {

// Lane backends for the path engine.  Both expose the same op set and every
// op is IEEE-identical lane-for-lane, so any routine templated over a backend
// produces bit-identical results on either one.  Masks are canonical (all
// ones or all zeros per 64-bit lane); select/uselect only inspect sign bits,
// matching the AVX2 blend semantics.

struct ScalarBackend {
  static constexpr int width = 1;
  using F = double;
  using U = std::uint64_t;

  static F fset1(double x) { return x; }
  static U uset1(std::uint64_t x) { return x; }
  static U ulane_index() { return 0; }
  static F load(const double* p) { return *p; }
  static void store(double* p, F a) { *p = a; }

  static F add(F a, F b) { return a + b; }
  static F sub(F a, F b) { return a - b; }
  static F mul(F a, F b) { return a * b; }
  static F div(F a, F b) { return a / b; }
  static F fma(F a, F b, F c) { return std::fma(a, b, c); }
  static F sqrt(F a) { return std::sqrt(a); }
  static F neg(F a) { return -a; }
  static F min(F a, F b) { return a < b ? a : b; }  // NaN falls through to b
  static F max(F a, F b) { return a > b ? a : b; }

  static U cmp_lt(F a, F b) { return a < b ? ~0ull : 0ull; }
  static U cmp_le(F a, F b) { return a <= b ? ~0ull : 0ull; }
  static U cmp_ge(F a, F b) { return a >= b ? ~0ull : 0ull; }
  static U ucmp_ne0(U a) { return a != 0 ? ~0ull : 0ull; }

  static F select(U m, F a, F b) { return (m >> 63) ? a : b; }
  static U uselect(U m, U a, U b) { return (m >> 63) ? a : b; }

  static U uand(U a, U b) { return a & b; }
  static U uor(U a, U b) { return a | b; }
  static U uxor(U a, U b) { return a ^ b; }
  static U uandnot(U a, U b) { return ~a & b; }
  static U unot(U a) { return ~a; }
  static U uadd64(U a, U b) { return a + b; }
  template <int K>
  static U shr(U a) {
    return a >> K;
  }
  template <int K>
  static U shl(U a) {
    return a << K;
  }
  // 32x32 -> 64 product of the low halves, as vpmuludq does
  static U mul_lo32(U a, U b) { return (a & 0xffffffffull) * (b & 0xffffffffull); }

  static F to_double_52(U a) { return static_cast<double>(a); }  // exact below 2^52
  static U trunc_u(F a) { return static_cast<U>(static_cast<std::int64_t>(a)); }
  static F from_bits(U a) { return std::bit_cast<double>(a); }
  static U to_bits(F a) { return std::bit_cast<std::uint64_t>(a); }
  static F floor(F a) { return std::floor(a); }
  static F round_nearest(F a) { return std::nearbyint(a); }
  static F gather(const double* p, U idx) { return p[idx]; }

  static int movemask(U m) { return static_cast<int>(m >> 63); }
  static double lane(F a, int) { return a; }
  static std::uint64_t ulane(U a, int) { return a; }
};

#ifdef MSEXIT_AVX2_BACKEND

struct Avx2Backend {
  static constexpr int width = 4;
  using F = __m256d;
  using U = __m256i;

  static F fset1(double x) { return _mm256_set1_pd(x); }
  static U uset1(std::uint64_t x) { return _mm256_set1_epi64x(static_cast<long long>(x)); }
  static U ulane_index() { return _mm256_setr_epi64x(0, 1, 2, 3); }
  static F load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, F a) { _mm256_storeu_pd(p, a); }

  static F add(F a, F b) { return _mm256_add_pd(a, b); }
  static F sub(F a, F b) { return _mm256_sub_pd(a, b); }
  static F mul(F a, F b) { return _mm256_mul_pd(a, b); }
  static F div(F a, F b) { return _mm256_div_pd(a, b); }
  static F fma(F a, F b, F c) { return _mm256_fmadd_pd(a, b, c); }
  static F sqrt(F a) { return _mm256_sqrt_pd(a); }
  static F neg(F a) { return _mm256_xor_pd(a, _mm256_set1_pd(-0.0)); }
  static F min(F a, F b) { return _mm256_min_pd(a, b); }
  static F max(F a, F b) { return _mm256_max_pd(a, b); }

  static U cmp_lt(F a, F b) { return _mm256_castpd_si256(_mm256_cmp_pd(a, b, _CMP_LT_OQ)); }
  static U cmp_le(F a, F b) { return _mm256_castpd_si256(_mm256_cmp_pd(a, b, _CMP_LE_OQ)); }
  static U cmp_ge(F a, F b) { return _mm256_castpd_si256(_mm256_cmp_pd(a, b, _CMP_GE_OQ)); }
  static U ucmp_ne0(U a) {
    const U eq = _mm256_cmpeq_epi64(a, _mm256_setzero_si256());
    return _mm256_xor_si256(eq, _mm256_set1_epi64x(-1));
  }

  static F select(U m, F a, F b) { return _mm256_blendv_pd(b, a, _mm256_castsi256_pd(m)); }
  static U uselect(U m, U a, U b) {
    return _mm256_castpd_si256(_mm256_blendv_pd(_mm256_castsi256_pd(b), _mm256_castsi256_pd(a),
                                                _mm256_castsi256_pd(m)));
  }

  static U uand(U a, U b) { return _mm256_and_si256(a, b); }
  static U uor(U a, U b) { return _mm256_or_si256(a, b); }
  static U uxor(U a, U b) { return _mm256_xor_si256(a, b); }
  static U uandnot(U a, U b) { return _mm256_andnot_si256(a, b); }
  static U unot(U a) { return _mm256_xor_si256(a, _mm256_set1_epi64x(-1)); }
  static U uadd64(U a, U b) { return _mm256_add_epi64(a, b); }
  template <int K>
  static U shr(U a) {
    return _mm256_srli_epi64(a, K);
  }
  template <int K>
  static U shl(U a) {
    return _mm256_slli_epi64(a, K);
  }
  static U mul_lo32(U a, U b) { return _mm256_mul_epu32(a, b); }

  static F to_double_52(U a) {
    const U mag = uset1(0x4330000000000000ull);  // 2^52 exponent pattern
    const F biased = _mm256_castsi256_pd(uor(a, mag));
    return sub(biased, fset1(0x1p52));
  }
  static U trunc_u(F a) { return _mm256_cvtepi32_epi64(_mm256_cvttpd_epi32(a)); }
  static F from_bits(U a) { return _mm256_castsi256_pd(a); }
  static U to_bits(F a) { return _mm256_castpd_si256(a); }
  static F floor(F a) { return _mm256_floor_pd(a); }
  static F round_nearest(F a) {
    return _mm256_round_pd(a, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  }
  static F gather(const double* p, U idx) {
    const U packed = _mm256_permutevar8x32_epi32(idx, _mm256_setr_epi32(0, 2, 4, 6, 0, 2, 4, 6));
    return _mm256_i32gather_pd(p, _mm256_castsi256_si128(packed), 8);
  }

  static int movemask(U m) { return _mm256_movemask_pd(_mm256_castsi256_pd(m)); }
  static double lane(F a, int i) {
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, a);
    return tmp[i];
  }
  static std::uint64_t ulane(U a, int i) {
    alignas(32) std::uint64_t tmp[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(tmp), a);
    return tmp[i];
  }
};

#endif  // MSEXIT_AVX2_BACKEND

}  // namespace msexit
