#pragma once

#include <cstdint>

#include "msexit/simd.hpp"

namespace msexit {

// Branch-free math kernels templated over a lane backend.  The same template
// instantiated over ScalarBackend and Avx2Backend executes the identical
// operation sequence, so the two engines agree bit-for-bit.  Accuracy target
// is a few ulps, which is far below the Monte Carlo resolution they feed.
template <class B>
struct Kernels {
  using F = typename B::F;
  using U = typename B::U;

  // natural log; x must be a positive normal number
  static F log(F x) {
    const U bits = B::to_bits(x);
    const U expo = B::template shr<52>(bits);
    F e = B::sub(B::to_double_52(expo), B::fset1(1023.0));
    const U mant = B::uor(B::uand(bits, B::uset1(0x000fffffffffffffull)),
                          B::uset1(0x3ff0000000000000ull));
    F m = B::from_bits(mant);  // [1, 2)
    const U big = B::cmp_ge(m, B::fset1(0x1.6a09e667f3bcdp+0));
    m = B::select(big, B::mul(m, B::fset1(0.5)), m);
    e = B::select(big, B::add(e, B::fset1(1.0)), e);

    const F t = B::div(B::sub(m, B::fset1(1.0)), B::add(m, B::fset1(1.0)));
    const F w = B::mul(t, t);  // < 0.0295: atanh series converges fast
    F p = B::fset1(1.0 / 23.0);
    p = B::fma(p, w, B::fset1(1.0 / 21.0));
    p = B::fma(p, w, B::fset1(1.0 / 19.0));
    p = B::fma(p, w, B::fset1(1.0 / 17.0));
    p = B::fma(p, w, B::fset1(1.0 / 15.0));
    p = B::fma(p, w, B::fset1(1.0 / 13.0));
    p = B::fma(p, w, B::fset1(1.0 / 11.0));
    p = B::fma(p, w, B::fset1(1.0 / 9.0));
    p = B::fma(p, w, B::fset1(1.0 / 7.0));
    p = B::fma(p, w, B::fset1(1.0 / 5.0));
    p = B::fma(p, w, B::fset1(1.0 / 3.0));
    p = B::fma(p, w, B::fset1(1.0));

    const F s = B::mul(B::add(t, t), p);
    F r = B::fma(e, B::fset1(0x1.a39ef35793c76p-33), s);   // ln2 low part
    r = B::fma(e, B::fset1(0x1.62e42fee00000p-1), r);      // ln2 high part
    return r;
  }

  static F exp(F x) {
    F k = B::round_nearest(B::mul(x, B::fset1(0x1.71547652b82fep+0)));
    k = B::max(B::min(k, B::fset1(1023.0)), B::fset1(-1022.0));
    F r = B::fma(k, B::fset1(-0x1.62e42fee00000p-1), x);
    r = B::fma(k, B::fset1(-0x1.a39ef35793c76p-33), r);

    F q = B::fset1(1.0 / 6227020800.0);  // 1/13!
    q = B::fma(q, r, B::fset1(1.0 / 479001600.0));
    q = B::fma(q, r, B::fset1(1.0 / 39916800.0));
    q = B::fma(q, r, B::fset1(1.0 / 3628800.0));
    q = B::fma(q, r, B::fset1(1.0 / 362880.0));
    q = B::fma(q, r, B::fset1(1.0 / 40320.0));
    q = B::fma(q, r, B::fset1(1.0 / 5040.0));
    q = B::fma(q, r, B::fset1(1.0 / 720.0));
    q = B::fma(q, r, B::fset1(1.0 / 120.0));
    q = B::fma(q, r, B::fset1(1.0 / 24.0));
    q = B::fma(q, r, B::fset1(1.0 / 6.0));
    q = B::fma(q, r, B::fset1(0.5));
    q = B::fma(q, r, B::fset1(1.0));
    q = B::fma(q, r, B::fset1(1.0));

    const U ki = B::trunc_u(B::add(k, B::fset1(1024.0)));  // k+1024 in [2, 2047]
    const U ebits = B::template shl<52>(B::uadd64(ki, B::uset1(~0ull)));
    return B::mul(q, B::from_bits(ebits));
  }

  // sin and cos of 2*pi*t for t in [0, 1)
  static void sincos2pi(F t, F& s_out, F& c_out) {
    const F q = B::round_nearest(B::mul(t, B::fset1(4.0)));
    const F r = B::fma(q, B::fset1(-0.25), t);           // |r| <= 1/8
    const F a = B::mul(r, B::fset1(0x1.921fb54442d18p+2));  // 2*pi*r, |a| <= pi/4
    const F w = B::mul(a, a);

    F sp = B::fset1(-1.0 / 121645100408832000.0);
    sp = B::fma(sp, w, B::fset1(1.0 / 355687428096000.0));
    sp = B::fma(sp, w, B::fset1(-1.0 / 1307674368000.0));
    sp = B::fma(sp, w, B::fset1(1.0 / 6227020800.0));
    sp = B::fma(sp, w, B::fset1(-1.0 / 39916800.0));
    sp = B::fma(sp, w, B::fset1(1.0 / 362880.0));
    sp = B::fma(sp, w, B::fset1(-1.0 / 5040.0));
    sp = B::fma(sp, w, B::fset1(1.0 / 120.0));
    sp = B::fma(sp, w, B::fset1(-1.0 / 6.0));
    const F sinp = B::fma(B::mul(a, w), sp, a);

    F cp = B::fset1(-1.0 / 6402373705728000.0);
    cp = B::fma(cp, w, B::fset1(1.0 / 20922789888000.0));
    cp = B::fma(cp, w, B::fset1(-1.0 / 87178291200.0));
    cp = B::fma(cp, w, B::fset1(1.0 / 479001600.0));
    cp = B::fma(cp, w, B::fset1(-1.0 / 3628800.0));
    cp = B::fma(cp, w, B::fset1(1.0 / 40320.0));
    cp = B::fma(cp, w, B::fset1(-1.0 / 720.0));
    cp = B::fma(cp, w, B::fset1(1.0 / 24.0));
    cp = B::fma(cp, w, B::fset1(-0.5));
    const F cosp = B::fma(w, cp, B::fset1(1.0));

    const U qi = B::trunc_u(q);  // {0,...,4}
    const U odd = B::ucmp_ne0(B::uand(qi, B::uset1(1)));
    const U sflip = B::ucmp_ne0(B::uand(qi, B::uset1(2)));
    const U cflip = B::ucmp_ne0(B::uand(B::uadd64(qi, B::uset1(1)), B::uset1(2)));
    const U signbit = B::uset1(0x8000000000000000ull);

    F s = B::select(odd, cosp, sinp);
    F c = B::select(odd, sinp, cosp);
    s = B::from_bits(B::uxor(B::to_bits(s), B::uand(sflip, signbit)));
    c = B::from_bits(B::uxor(B::to_bits(c), B::uand(cflip, signbit)));
    s_out = s;
    c_out = c;
  }

  // 10-round Philox 4x32 on u32 values carried in u64 lanes
  static void philox(U c[4], U k0, U k1) {
    const U m0 = B::uset1(0xD2511F53ull);
    const U m1 = B::uset1(0xCD9E8D57ull);
    const U w0 = B::uset1(0x9E3779B9ull);
    const U w1 = B::uset1(0xBB67AE85ull);
    const U mask32 = B::uset1(0xffffffffull);
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k0 = B::uand(B::uadd64(k0, w0), mask32);
        k1 = B::uand(B::uadd64(k1, w1), mask32);
      }
      const U p0 = B::mul_lo32(m0, c[0]);
      const U p1 = B::mul_lo32(m1, c[2]);
      const U hi0 = B::template shr<32>(p0);
      const U lo0 = B::uand(p0, mask32);
      const U hi1 = B::template shr<32>(p1);
      const U lo1 = B::uand(p1, mask32);
      const U n0 = B::uxor(B::uxor(hi1, c[1]), k0);
      const U n2 = B::uxor(B::uxor(hi0, c[3]), k1);
      c[0] = n0;
      c[1] = lo1;
      c[2] = n2;
      c[3] = lo0;
    }
  }

  // Two independent standard normals per counter block (Box-Muller pair);
  // block and seed are uniform across lanes, the path index is per lane.
  static void normal_pair(std::uint64_t block, std::uint64_t seed, std::uint32_t salt, U path_lo,
                          U path_hi, F& n0, F& n1) {
    U c[4] = {B::uset1(block & 0xffffffffull), B::uset1(block >> 32), path_lo, path_hi};
    const U k0 = B::uset1((seed & 0xffffffffull) ^ salt);
    const U k1 = B::uset1(seed >> 32);
    philox(c, k0, k1);
    const U bits1 = B::uor(B::template shl<32>(c[0]), c[1]);
    const U bits2 = B::uor(B::template shl<32>(c[2]), c[3]);
    const F u1 = B::mul(B::add(B::to_double_52(B::template shr<12>(bits1)), B::fset1(0.5)),
                        B::fset1(0x1p-52));
    const F u2 = B::mul(B::add(B::to_double_52(B::template shr<12>(bits2)), B::fset1(0.5)),
                        B::fset1(0x1p-52));
    const F rad = B::sqrt(B::mul(B::fset1(-2.0), log(u1)));
    F sn, cs;
    sincos2pi(u2, sn, cs);
    n0 = B::mul(rad, cs);
    n1 = B::mul(rad, sn);
  }
};

}  // namespace msexit
