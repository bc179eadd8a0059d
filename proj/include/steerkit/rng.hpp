#pragma once

// Counter-based randomness: Philox4x32-10 keyed by the run seed, with the
// 128-bit counter split as (sample index, draw index). Every sample owns an
// independent stream, so parallel rollouts produce identical bits regardless
// of scheduling. Gaussian draws use Box-Muller on (u1, u2) from consecutive
// lanes of one block; uniforms map a 32-bit word w to (w + 0.5) * 2^-32,
// which never returns 0 or 1.

#include <cstdint>

#include "steerkit/linalg.hpp"

namespace steerkit {

struct PhiloxBlock {
  uint32_t w[4];
};

// One keyed block of Philox4x32-10 (Salmon et al. round structure).
inline PhiloxBlock philox4x32(uint32_t c0, uint32_t c1, uint32_t c2,
                              uint32_t c3, uint32_t k0, uint32_t k1) {
  constexpr uint32_t kWeylA = 0x9E3779B9u;
  constexpr uint32_t kWeylB = 0xBB67AE85u;
  constexpr uint32_t kMulA = 0xD2511F53u;
  constexpr uint32_t kMulB = 0xCD9E8D57u;
  uint32_t x0 = c0, x1 = c1, x2 = c2, x3 = c3;
  for (int round = 0; round < 10; ++round) {
    uint64_t p0 = static_cast<uint64_t>(kMulA) * x0;
    uint64_t p1 = static_cast<uint64_t>(kMulB) * x2;
    uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    uint32_t lo0 = static_cast<uint32_t>(p0);
    uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    uint32_t lo1 = static_cast<uint32_t>(p1);
    uint32_t n0 = hi1 ^ x1 ^ k0;
    uint32_t n1 = lo1;
    uint32_t n2 = hi0 ^ x3 ^ k1;
    uint32_t n3 = lo0;
    x0 = n0;
    x1 = n1;
    x2 = n2;
    x3 = n3;
    k0 += kWeylA;
    k1 += kWeylB;
  }
  return PhiloxBlock{{x0, x1, x2, x3}};
}

inline uint64_t splitmix64(uint64_t z) {
  z += UINT64_C(0x9E3779B97F4A7C15);
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

// Stream of draws for one (seed, sample) pair; the draw counter advances one
// block (4 uniforms / 2 normals) at a time.
class SampleStream {
 public:
  SampleStream(uint64_t seed, uint64_t sample_index)
      : k0_(static_cast<uint32_t>(seed)),
        k1_(static_cast<uint32_t>(seed >> 32)),
        c0_(static_cast<uint32_t>(sample_index)),
        c1_(static_cast<uint32_t>(sample_index >> 32)) {}

  PhiloxBlock next_block() {
    PhiloxBlock b = philox4x32(c0_, c1_, static_cast<uint32_t>(draw_),
                               static_cast<uint32_t>(draw_ >> 32), k0_, k1_);
    ++draw_;
    return b;
  }

  static double to_unit(uint32_t w) {
    return (static_cast<double>(w) + 0.5) * 0x1p-32;
  }

  // Two standard normals from one block (lanes 0,1 and 2,3 pair up).
  void normal_pair(double& z0, double& z1) {
    PhiloxBlock b = next_block();
    double u1 = to_unit(b.w[0]);
    double u2 = to_unit(b.w[1]);
    double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(2.0 * 3.14159265358979323846 * u2);
    z1 = r * std::sin(2.0 * 3.14159265358979323846 * u2);
  }

  Vec<double> standard_normal(int n) {
    Vec<double> z(n);
    for (int i = 0; i < n; i += 2) {
      double a, b;
      normal_pair(a, b);
      z[i] = a;
      if (i + 1 < n) z[i + 1] = b;
    }
    return z;
  }

  // Uniform in [0,1) lanes, consumed 4 per block.
  double uniform() {
    if (lane_ == 0) {
      cached_ = next_block();
    }
    double u = to_unit(cached_.w[lane_]);
    lane_ = (lane_ + 1) & 3;
    return u;
  }

 private:
  uint32_t k0_, k1_, c0_, c1_;
  uint64_t draw_ = 0;
  PhiloxBlock cached_{};
  int lane_ = 0;
};

// Seed for the ensemble of descent iteration k; collision-free in k.
inline uint64_t derive_iteration_seed(uint64_t seed, uint32_t k) {
  return splitmix64(seed + (static_cast<uint64_t>(k) + 1) *
                               UINT64_C(0x9E3779B97F4A7C15));
}

}  // namespace steerkit
