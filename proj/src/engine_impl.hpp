#pragma once

// Step-loop templates shared by the scalar and AVX2 engine translation units.
// Everything in the hot loop goes through backend ops so both instantiations
// run the identical floating-point sequence lane by lane.

#include <algorithm>
#include <cstdint>

#include "msexit/common.hpp"
#include "msexit/engine.hpp"
#include "msexit/kernels.hpp"

namespace msexit {
namespace detail {

constexpr int kMaxHarmonics = 24;
constexpr std::uint32_t kPathSalt = 0;  // StreamClass::path

template <class B>
struct EngineCore {
  using F = typename B::F;
  using U = typename B::U;
  using K = Kernels<B>;
  static constexpr int W = B::width;

  struct Harmonics {
    F C[kMaxHarmonics];
    F S[kMaxHarmonics];
  };

  static void build_harmonics(F t, int n, Harmonics& h) {
    F s1, c1;
    K::sincos2pi(t, s1, c1);
    if (n == 0) return;
    h.C[0] = c1;
    h.S[0] = s1;
    for (int k = 1; k < n; ++k) {
      h.C[k] = B::sub(B::mul(c1, h.C[k - 1]), B::mul(s1, h.S[k - 1]));
      h.S[k] = B::add(B::mul(s1, h.C[k - 1]), B::mul(c1, h.S[k - 1]));
    }
  }

  static F eval_trig(const CompiledTrig& tp, const Harmonics& h) {
    F acc = B::fset1(tp.a0);
    for (std::size_t k = 0; k < tp.cosk.size(); ++k)
      acc = B::fma(B::fset1(tp.cosk[k]), h.C[k], acc);
    for (std::size_t k = 0; k < tp.sink.size(); ++k)
      acc = B::fma(B::fset1(tp.sink[k]), h.S[k], acc);
    return acc;
  }

  static F eval_poly(const std::vector<double>& p, F x) {
    if (p.empty()) return B::fset1(0.0);
    F acc = B::fset1(p.back());
    for (std::size_t i = p.size() - 1; i-- > 0;) acc = B::fma(acc, x, B::fset1(p[i]));
    return acc;
  }

  static F eval_field(const CompiledField& f, F x, const Harmonics& h) {
    F acc = B::fset1(0.0);
    for (const auto& term : f.terms) acc = B::fma(eval_poly(term.poly, x), eval_trig(term.trig, h), acc);
    return acc;
  }

  static F fabs(F x) { return B::from_bits(B::uand(B::to_bits(x), B::uset1(0x7fffffffffffffffull))); }

  // shared exit/blow-up bookkeeping state for one batch
  struct BatchState {
    F X, tau, exit_state;
    U active, exited, at_upper, exit_step, bad;
    U path_lo, path_hi;
    F stash;  // second normal of the current Box-Muller pair
  };

  static void init_batch(BatchState& st, const EnsembleSpec& spec, const double* x0, int n,
                         int base) {
    double xinit[W > 0 ? W : 1];
    for (int l = 0; l < W; ++l) xinit[l] = x0[std::min(base + l, n - 1)];
    st.X = B::load(xinit);
    const U pid = B::uadd64(B::uset1(spec.path_base + static_cast<std::uint64_t>(base)),
                            B::ulane_index());
    st.path_lo = B::uand(pid, B::uset1(0xffffffffull));
    st.path_hi = B::template shr<32>(pid);
    st.active = B::uset1(~0ull);
    st.exited = B::uset1(0);
    st.at_upper = B::uset1(0);
    st.exit_step = B::uset1(0);
    st.bad = B::uset1(0);
    st.tau = B::fset1(0.0);
    st.exit_state = B::fset1(0.0);
    st.stash = B::fset1(0.0);
    if (spec.trajectory) spec.trajectory[0] = xinit[0];
  }

  static F step_normal(BatchState& st, const EnsembleSpec& spec, std::uint64_t s) {
    if ((s & 1) == 0) {
      F n0, n1;
      K::normal_pair(s >> 1, spec.seed, kPathSalt, st.path_lo, st.path_hi, n0, n1);
      st.stash = n1;
      return n0;
    }
    return st.stash;
  }

  // returns true when every lane has exited
  static bool advance(BatchState& st, const EnsembleSpec& spec, std::uint64_t s, F Xn,
                      const F lo_v, const F hi_v, const F big_v) {
    if (spec.trajectory) spec.trajectory[s + 1] = B::lane(Xn, 0);
    bool done = false;
    if (spec.has_exit) {
      const U below = B::cmp_le(Xn, lo_v);
      const U above = B::cmp_ge(Xn, hi_v);
      const U newly = B::uand(st.active, B::uor(below, above));
      if (B::movemask(newly)) {
        const F boundary = B::select(above, hi_v, lo_v);
        const F f = B::div(B::sub(boundary, st.X), B::sub(Xn, st.X));
        const F tnew = B::mul(B::add(B::fset1(static_cast<double>(s)), f), B::fset1(spec.dt));
        st.tau = B::select(newly, tnew, st.tau);
        st.exit_state = B::select(newly, boundary, st.exit_state);
        st.at_upper = B::uselect(newly, above, st.at_upper);
        st.exit_step = B::uselect(newly, B::uset1(s), st.exit_step);
        st.exited = B::uor(st.exited, newly);
        st.active = B::uandnot(newly, st.active);
        done = B::movemask(st.active) == 0;
      }
      st.X = B::select(st.active, Xn, st.X);
    } else {
      st.X = Xn;
    }
    st.bad = B::uor(st.bad, B::uand(st.active, B::unot(B::cmp_le(fabs(st.X), big_v))));
    // stop the batch on the first blown-up lane: one more step could push the
    // state to inf and feed NaN into the range reduction
    if (B::movemask(st.bad)) return true;
    return done;
  }

  static void finish_batch(const BatchState& st, int n, int base, LaneOut* out) {
    if (B::movemask(st.bad)) throw SolverError("sde engine: path state blew up");
    for (int l = 0; l < W && base + l < n; ++l) {
      LaneOut& o = out[base + l];
      o.terminal = B::lane(st.X, l);
      o.tau = B::lane(st.tau, l);
      o.exit_state = B::lane(st.exit_state, l);
      o.exit_step = B::ulane(st.exit_step, l);
      o.exited = B::ulane(st.exited, l) != 0 ? 1 : 0;
      o.at_upper = B::ulane(st.at_upper, l) != 0 ? 1 : 0;
    }
  }

  static void multiscale(const MultiscaleProgram& prog, const EnsembleSpec& spec,
                         const double* x0, int n, LaneOut* out) {
    const bool has_psi = prog.psi_scale != 0.0 && !prog.psi.terms.empty();
    const F inv_cell = B::fset1(prog.inv_cell);
    const F fast_v = B::fset1(prog.fast_scale);
    const F psi_v = B::fset1(prog.psi_scale);
    const F noise_dt = B::fset1(prog.noise_scale * std::sqrt(spec.dt));
    const F dt_v = B::fset1(spec.dt);
    const F lo_v = B::fset1(spec.lower), hi_v = B::fset1(spec.upper);
    const F big_v = B::fset1(1e12);

    for (int base = 0; base < n; base += W) {
      BatchState st;
      init_batch(st, spec, x0, n, base);
      Harmonics h;
      for (std::uint64_t s = 0; s < spec.n_steps; ++s) {
        const F normal = step_normal(st, spec, s);
        F t = B::mul(st.X, inv_cell);
        t = B::sub(t, B::floor(t));
        build_harmonics(t, prog.n_harmonics, h);
        F drift = B::fma(eval_field(prog.b, st.X, h), fast_v, eval_field(prog.c, st.X, h));
        if (has_psi) drift = B::fma(eval_field(prog.psi, st.X, h), psi_v, drift);
        const F sig = eval_field(prog.sigma, st.X, h);
        const F Xn = B::add(st.X, B::fma(dt_v, drift, B::mul(B::mul(sig, normal), noise_dt)));
        if (advance(st, spec, s, Xn, lo_v, hi_v, big_v)) break;
      }
      finish_batch(st, n, base, out);
    }
  }

  static void conditioned(const ConditionedProgram& prog, const EnsembleSpec& spec,
                          const double* x0, int n, LaneOut* out) {
    const F inv_cell = B::fset1(prog.inv_cell);
    const F noise_dt = B::fset1(prog.noise_scale * std::sqrt(spec.dt));
    const F dt_v = B::fset1(spec.dt);
    const F corr_v = B::fset1(prog.correction_scale);
    const F lo_v = B::fset1(spec.lower), hi_v = B::fset1(spec.upper);
    const F big_v = B::fset1(1e12);
    const F tab_x0 = B::fset1(prog.table_x0);
    const F tab_inv_dx = B::fset1(prog.table_inv_dx);
    const F tab_clamp = B::fset1(static_cast<double>(prog.lnI.size() - 1) - 1e-9);
    const double* table = prog.lnI.data();

    for (int base = 0; base < n; base += W) {
      BatchState st;
      init_batch(st, spec, x0, n, base);
      Harmonics h;
      for (std::uint64_t s = 0; s < spec.n_steps; ++s) {
        const F normal = step_normal(st, spec, s);
        F t = B::mul(st.X, inv_cell);
        t = B::sub(t, B::floor(t));
        build_harmonics(t, prog.n_harmonics, h);
        F drift = B::add(eval_trig(prog.fast_drift, h), eval_poly(prog.slow_drift, st.X));
        const F lnh = B::add(eval_trig(prog.lnh_trig, h), eval_poly(prog.lnh_poly, st.X));
        F pos = B::mul(B::sub(st.X, tab_x0), tab_inv_dx);
        pos = B::max(pos, B::fset1(0.0));
        pos = B::min(pos, tab_clamp);
        const F jf = B::floor(pos);
        const U j = B::trunc_u(jf);
        const F frac = B::sub(pos, jf);
        const F Tj = B::gather(table, j);
        const F Tj1 = B::gather(table + 1, j);
        const F lnI = B::fma(frac, B::sub(Tj1, Tj), Tj);
        drift = B::fma(corr_v, K::exp(B::sub(lnh, lnI)), drift);
        const F Xn = B::add(st.X, B::fma(dt_v, drift, B::mul(normal, noise_dt)));
        if (advance(st, spec, s, Xn, lo_v, hi_v, big_v)) break;
      }
      finish_batch(st, n, base, out);
    }
  }

  static void kernel_probe(int mode, const double* in, double* out, int n) {
    double buf[W > 0 ? W : 1];
    for (int base = 0; base < n; base += W) {
      for (int l = 0; l < W; ++l) buf[l] = in[std::min(base + l, n - 1)];
      const F x = B::load(buf);
      F r;
      if (mode == 0) {
        r = K::log(x);
      } else if (mode == 1) {
        r = K::exp(x);
      } else {
        F s, c;
        K::sincos2pi(x, s, c);
        r = mode == 2 ? s : c;
      }
      B::store(buf, r);
      for (int l = 0; l < W && base + l < n; ++l) out[base + l] = buf[l];
    }
  }

  static void normal_probe(std::uint64_t seed, std::uint32_t salt, std::uint64_t block,
                           std::uint64_t path_base, double* out, int n_pairs) {
    double b0[W > 0 ? W : 1], b1[W > 0 ? W : 1];
    for (int base = 0; base < n_pairs; base += W) {
      const U pid = B::uadd64(B::uset1(path_base + static_cast<std::uint64_t>(base)),
                              B::ulane_index());
      F n0, n1;
      K::normal_pair(block, seed, salt, B::uand(pid, B::uset1(0xffffffffull)),
                     B::template shr<32>(pid), n0, n1);
      B::store(b0, n0);
      B::store(b1, n1);
      for (int l = 0; l < W && base + l < n_pairs; ++l) {
        out[2 * (base + l)] = b0[l];
        out[2 * (base + l) + 1] = b1[l];
      }
    }
  }
};

}  // namespace detail
}  // namespace msexit
