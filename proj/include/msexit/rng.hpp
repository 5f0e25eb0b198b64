#pragma once

#include <array>
#include <cstdint>

namespace msexit {

// 10-round Philox 4x32 counter-based generator.  Stateless: every block is a
// pure function of (counter, key), so path ensembles can be merged or split
// without changing any single path's randomness.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Consumers get disjoint streams by salting the key, never by sharing counters.
enum class StreamClass : std::uint32_t {
  path = 0,          // driving noise of simulated paths
  ou_sampler = 1,    // limiting OU process draws
  initial_draw = 2,  // initial-condition perturbations
};

// maps 64 random bits to a uniform in the open interval (0,1)
double u64_to_unit_double(std::uint64_t bits);

// One standard normal per (seed, class, path, step); reference scalar
// implementation (the batched engine recomputes the same blocks internally).
struct NormalStream {
  std::uint64_t seed = 0;
  StreamClass cls = StreamClass::path;

  std::array<std::uint32_t, 4> raw(std::uint64_t path, std::uint64_t step) const;
  double uniform(std::uint64_t path, std::uint64_t step) const;
  double normal(std::uint64_t path, std::uint64_t step) const;
};

}  // namespace msexit
