#include "engine_impl.hpp"

namespace msexit {
namespace detail {

using Core = EngineCore<ScalarBackend>;

void run_multiscale_scalar(const MultiscaleProgram& prog, const EnsembleSpec& spec,
                           const double* x0, int n, LaneOut* out) {
  Core::multiscale(prog, spec, x0, n, out);
}

void run_conditioned_scalar(const ConditionedProgram& prog, const EnsembleSpec& spec,
                            const double* x0, int n, LaneOut* out) {
  Core::conditioned(prog, spec, x0, n, out);
}

void kernel_probe_scalar(int mode, const double* in, double* out, int n) {
  Core::kernel_probe(mode, in, out, n);
}

void normal_probe_scalar(std::uint64_t seed, std::uint32_t salt, std::uint64_t block,
                         std::uint64_t path_base, double* out, int n_pairs) {
  Core::normal_probe(seed, salt, block, path_base, out, n_pairs);
}

}  // namespace detail
}  // namespace msexit
