#pragma once

#include <cstdint>
#include <vector>

#include "msexit/functions.hpp"

namespace msexit {

// Runtime choice of the batched path engine.  The AVX2 engine runs the same
// templated step code four lanes wide and is bit-identical to the scalar one;
// force_* exists so tests can pin either implementation.
enum class SimdMode { autodetect, force_scalar, force_avx2 };

void set_simd_override(SimdMode m);
SimdMode simd_override();
bool simd_active();       // true when ensembles will take the AVX2 path
bool avx2_available();    // compiled in and supported by this CPU

// Coefficient fields lowered to a flat form the step loop can evaluate:
// sum of poly(x) * trig(y) terms sharing one table of cell harmonics.
struct CompiledTrig {
  double a0 = 0.0;
  std::vector<double> cosk, sink;  // harmonic k+1 coefficients
};

struct CompiledTerm {
  std::vector<double> poly;  // ascending coefficients
  CompiledTrig trig;
};

struct CompiledField {
  std::vector<CompiledTerm> terms;
};

CompiledField compile_field(const CoefficientField& f);
int field_harmonics(const CompiledField& f);

// Euler-Maruyama program for the multiscale dynamics
//   dX = [fast_scale*b + c + psi_scale*psi](X, X/delta) dt
//        + noise_scale*sigma(X, X/delta) dW.
struct MultiscaleProgram {
  CompiledField b, c, sigma, psi;
  int n_harmonics = 0;
  double inv_cell = 0.0;     // 1/(delta*rho): cell coordinate = frac(x*inv_cell)
  double fast_scale = 0.0;   // epsilon/delta
  double psi_scale = 0.0;    // epsilon^{a1/2}; zero disables the psi term
  double noise_scale = 0.0;  // sqrt(epsilon)
};

// Conditioned rough-potential program:
//   dX = [fast_drift(X/delta) + slow_drift(X)
//         + correction_scale*exp(lnh(X) - lnI(X))] dt + noise_scale dW
// with lnh evaluated analytically and lnI(x) = ln integral_0^x h from a
// piecewise-linear log-space table.
struct ConditionedProgram {
  CompiledTrig fast_drift;         // -(eps/delta) Q'(y) on the unit cell
  std::vector<double> slow_drift;  // coefficients of -V'(x)
  CompiledTrig lnh_trig;           // Q(y)/D
  std::vector<double> lnh_poly;    // (V(x)-V(0))/(eps D) - Q(0)/D
  int n_harmonics = 0;
  double inv_cell = 0.0;
  double correction_scale = 0.0;  // 2 eps D
  double noise_scale = 0.0;       // sqrt(2 eps D)
  double table_x0 = 0.0;
  double table_inv_dx = 0.0;
  std::vector<double> lnI;
};

struct EnsembleSpec {
  double dt = 0.0;
  std::uint64_t n_steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t path_base = 0;  // global index of the first path
  bool has_exit = false;
  double lower = 0.0;
  double upper = 0.0;
  double* trajectory = nullptr;  // single-path mode: n_steps+1 raw states
};

struct LaneOut {
  double terminal = 0.0;    // state at the horizon (pre-exit value if exited)
  double tau = 0.0;         // linearly interpolated crossing time
  double exit_state = 0.0;  // boundary value crossed
  std::uint64_t exit_step = 0;
  std::uint8_t exited = 0;
  std::uint8_t at_upper = 0;
};

// x0 and out have n entries; path i uses the stream (seed, path_base + i),
// so results are independent of batch width and call partitioning.
void run_multiscale_ensemble(const MultiscaleProgram& prog, const EnsembleSpec& spec,
                             const double* x0, int n, LaneOut* out);
void run_conditioned_ensemble(const ConditionedProgram& prog, const EnsembleSpec& spec,
                              const double* x0, int n, LaneOut* out);

namespace detail {

void run_multiscale_scalar(const MultiscaleProgram&, const EnsembleSpec&, const double*, int,
                           LaneOut*);
void run_conditioned_scalar(const ConditionedProgram&, const EnsembleSpec&, const double*, int,
                            LaneOut*);
void run_multiscale_avx2(const MultiscaleProgram&, const EnsembleSpec&, const double*, int,
                         LaneOut*);
void run_conditioned_avx2(const ConditionedProgram&, const EnsembleSpec&, const double*, int,
                          LaneOut*);

// equivalence probes: mode 0=log, 1=exp, 2=sin2pi, 3=cos2pi
void kernel_probe_scalar(int mode, const double* in, double* out, int n);
void kernel_probe_avx2(int mode, const double* in, double* out, int n);
void normal_probe_scalar(std::uint64_t seed, std::uint32_t salt, std::uint64_t block,
                         std::uint64_t path_base, double* out, int n_pairs);
void normal_probe_avx2(std::uint64_t seed, std::uint32_t salt, std::uint64_t block,
                       std::uint64_t path_base, double* out, int n_pairs);

}  // namespace detail

}  // namespace msexit
