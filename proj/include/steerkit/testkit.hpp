#pragma once

// Deterministic random model builders for property tests and verification
// suites: smooth nonlinear stage maps and affine policies with coefficients
// drawn from counter-based streams, so every "random system" is reproducible
// from its seed.

#include <cstdint>
#include <utility>

#include "steerkit/dynamics.hpp"
#include "steerkit/linalg.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/rng.hpp"

namespace steerkit {

inline double random_uniform_pm1(SampleStream& s) {
  return 2.0 * s.uniform() - 1.0;
}

inline Mat<double> random_matrix(SampleStream& s, int rows, int cols,
                                 double scale) {
  Mat<double> M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = scale * random_uniform_pm1(s);
  return M;
}

inline Vec<double> random_vector(SampleStream& s, int n, double scale) {
  Vec<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * random_uniform_pm1(s);
  return v;
}

// A horizon-T system whose stage maps are affine plus a bounded sinusoid:
//   f_s(x, u) = A_s x + B_s u + c_s + amp·trig(⟨d_{s,i}, x⟩ + e_{s,i})  per row,
// smooth with derivatives bounded by the coefficient scales.
inline SchedulePtr make_random_smooth_system(std::uint64_t seed, int T = 3,
                                             int n = 2, int m = 2,
                                             double amp = 0.3) {
  std::vector<StagePtr> stages;
  stages.reserve(static_cast<std::size_t>(T));
  for (int s = 0; s < T; ++s) {
    SampleStream rng(seed, static_cast<std::uint64_t>(s));
    Mat<double> A = random_matrix(rng, n, n, 0.7);
    Mat<double> B = random_matrix(rng, n, m, 0.5);
    for (int i = 0; i < n && i < m; ++i) B(i, i) += 1.0;
    Vec<double> c = random_vector(rng, n, 0.5);
    Mat<double> D = random_matrix(rng, n, n, 0.8);
    Vec<double> e = random_vector(rng, n, 3.0);
    auto f = [A, B, c, D, e, amp, n, m](const auto& x, const auto& u) {
      using S = std::decay_t<decltype(x[0])>;
      Vec<S> out(n);
      for (int i = 0; i < n; ++i) {
        S acc(c[i]);
        for (int j = 0; j < n; ++j) acc = acc + A(i, j) * x[j];
        for (int j = 0; j < m; ++j) acc = acc + B(i, j) * u[j];
        S phase(e[i]);
        for (int j = 0; j < n; ++j) phase = phase + D(i, j) * x[j];
        acc = acc + amp * (i % 2 == 0 ? sin(phase) : cos(phase));
        out[i] = acc;
      }
      return out;
    };
    stages.push_back(make_stage(n, m, std::move(f)));
  }
  return make_schedule(std::move(stages));
}

inline PolicyPtr make_random_linear_policy(std::uint64_t seed, int n, int m,
                                           double scale = 0.4) {
  SampleStream rng(seed, 0xF00Du);
  Mat<double> A = random_matrix(rng, m, n, scale);
  Vec<double> b = random_vector(rng, m, scale);
  return std::make_shared<LinearPolicy>(A, b);
}

inline PolicySchedule make_random_linear_schedule(std::uint64_t seed, int T,
                                                  int n, int m,
                                                  double scale = 0.4) {
  PolicySchedule phi(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    phi[static_cast<std::size_t>(t)] = make_random_linear_policy(
        splitmix64(seed + static_cast<std::uint64_t>(t) + 1), n, m, scale);
  return phi;
}

}  // namespace steerkit
