#ifndef HARQIR_RNG_HPP
#define HARQIR_RNG_HPP

// Counter-based random numbers (Philox4x32-10).  Every variate is a pure
// function of (seed, draw index, slot), so parallel workers need no shared
// state and any partition of the draw range reproduces the same stream.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

#include "harqir/common.hpp"

namespace harqir {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0,
                         std::uint32_t k1) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
  c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::uint32_t key0,
                                                  std::uint32_t key1) {
  for (int round = 0; round < 10; ++round) {
    if (round) {
      key0 += detail::kPhiloxW0;
      key1 += detail::kPhiloxW1;
    }
    detail::philox_round(ctr, key0, key1);
  }
  return ctr;
}

// One keyed generator call -> two doubles in the open interval (0,1).
// Counter layout: (draw low, draw high, slot, stream).
struct counter_rng {
  std::uint32_t key0 = 0, key1 = 0;
  std::uint32_t stream = 0;

  explicit counter_rng(std::uint64_t seed, std::uint32_t stream_tag = 0)
      : key0(std::uint32_t(seed)), key1(std::uint32_t(seed >> 32)), stream(stream_tag) {}

  std::array<double, 2> uniform_pair(std::uint64_t draw, std::uint32_t slot) const {
    const auto words = philox4x32_10(
        {std::uint32_t(draw), std::uint32_t(draw >> 32), slot, stream}, key0, key1);
    const std::uint64_t a = (std::uint64_t(words[0]) << 32) | words[1];
    const std::uint64_t b = (std::uint64_t(words[2]) << 32) | words[3];
    // 53-bit mantissas, offset by half an ulp so 0 is never produced.
    return {double(a >> 11) * 0x1p-53 + 0x1p-54, double(b >> 11) * 0x1p-53 + 0x1p-54};
  }

  // Box-Muller pair of standard normals.
  std::array<double, 2> normal_pair(std::uint64_t draw, std::uint32_t slot) const {
    const auto u = uniform_pair(draw, slot);
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double phi = 2.0 * M_PI * u[1];
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  // Standard circularly-symmetric complex normal, E|z|^2 = 1.
  cdouble complex_normal(std::uint64_t draw, std::uint32_t slot) const {
    const auto n = normal_pair(draw, slot);
    return {n[0] * M_SQRT1_2, n[1] * M_SQRT1_2};
  }

  // Gamma variate with integer shape (sum of -log of uniforms); consumes
  // ceil(shape/2) slots starting at slot_base.
  double gamma_integer(int shape, double scale, std::uint64_t draw,
                       std::uint32_t slot_base) const {
    double acc = 0.0;
    int got = 0;
    std::uint32_t slot = slot_base;
    while (got < shape) {
      const auto u = uniform_pair(draw, slot++);
      acc -= std::log(u[0]);
      if (++got < shape) {
        acc -= std::log(u[1]);
        ++got;
      }
    }
    return scale * acc;
  }
};

}  // namespace harqir

#endif
