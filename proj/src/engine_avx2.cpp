// Compiled with -mavx2 -mfma; keep this translation unit free of any code
// that might run on CPUs without AVX2.
#include "engine_impl.hpp"

#ifndef MSEXIT_AVX2_BACKEND
#error "engine_avx2.cpp must be compiled with -mavx2 -mfma"
#endif

namespace msexit {
namespace detail {

using Core = EngineCore<Avx2Backend>;

void run_multiscale_avx2(const MultiscaleProgram& prog, const EnsembleSpec& spec,
                         const double* x0, int n, LaneOut* out) {
  Core::multiscale(prog, spec, x0, n, out);
}

void run_conditioned_avx2(const ConditionedProgram& prog, const EnsembleSpec& spec,
                          const double* x0, int n, LaneOut* out) {
  Core::conditioned(prog, spec, x0, n, out);
}

void kernel_probe_avx2(int mode, const double* in, double* out, int n) {
  Core::kernel_probe(mode, in, out, n);
}

void normal_probe_avx2(std::uint64_t seed, std::uint32_t salt, std::uint64_t block,
                       std::uint64_t path_base, double* out, int n_pairs) {
  Core::normal_probe(seed, salt, block, path_base, out, n_pairs);
}

}  // namespace detail
}  // namespace msexit
