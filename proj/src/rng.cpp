#include "msexit/rng.hpp"

#include <cmath>

namespace msexit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kBump0 = 0x9E3779B9u;
constexpr std::uint32_t kBump1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kBump0;
      key[1] += kBump1;
    }
    round_once(ctr, key);
  }
  return ctr;
}

double u64_to_unit_double(std::uint64_t bits) {
  // 52 significant bits, offset to keep the value strictly inside (0,1);
  // with 53 bits the top value would round up to exactly 1.0
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

std::array<std::uint32_t, 4> NormalStream::raw(std::uint64_t path, std::uint64_t step) const {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed) ^ static_cast<std::uint32_t>(cls),
      static_cast<std::uint32_t>(seed >> 32)};
  return philox4x32(ctr, key);
}

double NormalStream::uniform(std::uint64_t path, std::uint64_t step) const {
  const auto r = raw(path, step);
  return u64_to_unit_double((static_cast<std::uint64_t>(r[0]) << 32) | r[1]);
}

double NormalStream::normal(std::uint64_t path, std::uint64_t step) const {
  const auto r = raw(path, step);
  const double u1 = u64_to_unit_double((static_cast<std::uint64_t>(r[0]) << 32) | r[1]);
  const double u2 = u64_to_unit_double((static_cast<std::uint64_t>(r[2]) << 32) | r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace msexit
