#include <cmath>
#include <limits>

#include "msexit/common.hpp"
#include "msexit/engine.hpp"

namespace msexit {

namespace {

SimdMode g_mode = SimdMode::autodetect;

// NaN or near-overflow starts would feed garbage into the cell-coordinate
// range reduction before the in-loop blow-up guard can catch them.
void check_starts(const double* x0, int n) {
  for (int i = 0; i < n; ++i)
    if (!(std::fabs(x0[i]) <= 1e12))
      throw ConfigError("sde engine: initial state must be finite and below the blow-up bound");
}

}  // namespace

void set_simd_override(SimdMode m) {
  if (m == SimdMode::force_avx2 && !avx2_available())
    throw ConfigError("simd: avx2 engine not available on this build/cpu");
  g_mode = m;
}

SimdMode simd_override() { return g_mode; }

bool avx2_available() {
#ifdef MSEXIT_HAVE_AVX2_TU
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool simd_active() {
  switch (g_mode) {
    case SimdMode::force_scalar: return false;
    case SimdMode::force_avx2: return true;
    default: return avx2_available();
  }
}

void run_multiscale_ensemble(const MultiscaleProgram& prog, const EnsembleSpec& spec,
                             const double* x0, int n, LaneOut* out) {
  if (n <= 0) throw ConfigError("sde engine: ensemble size must be positive");
  if (prog.n_harmonics > 24) throw ConfigError("sde engine: too many trig harmonics");
  check_starts(x0, n);
#ifdef MSEXIT_HAVE_AVX2_TU
  if (simd_active()) {
    detail::run_multiscale_avx2(prog, spec, x0, n, out);
    return;
  }
#endif
  detail::run_multiscale_scalar(prog, spec, x0, n, out);
}

void run_conditioned_ensemble(const ConditionedProgram& prog, const EnsembleSpec& spec,
                              const double* x0, int n, LaneOut* out) {
  if (n <= 0) throw ConfigError("sde engine: ensemble size must be positive");
  if (prog.n_harmonics > 24) throw ConfigError("sde engine: too many trig harmonics");
  if (prog.lnI.size() < 2) throw ConfigError("sde engine: conditioned table too small");
  check_starts(x0, n);
#ifdef MSEXIT_HAVE_AVX2_TU
  if (simd_active()) {
    detail::run_conditioned_avx2(prog, spec, x0, n, out);
    return;
  }
#endif
  detail::run_conditioned_scalar(prog, spec, x0, n, out);
}

CompiledField compile_field(const CoefficientField& f) {
  CompiledField out;
  for (const auto& term : f.terms) {
    CompiledTerm ct;
    ct.poly = term.in_x.coeffs;
    ct.trig.a0 = term.in_y.a0;
    ct.trig.cosk = term.in_y.cos_coeffs;
    ct.trig.sink = term.in_y.sin_coeffs;
    out.terms.push_back(std::move(ct));
  }
  return out;
}

int field_harmonics(const CompiledField& f) {
  std::size_t n = 0;
  for (const auto& term : f.terms)
    n = std::max({n, term.trig.cosk.size(), term.trig.sink.size()});
  return static_cast<int>(n);
}

}  // namespace msexit
