#pragma once

// Monte-Carlo ensembles: initial laws, closed-loop rollouts, and the steering
// objective J(φ) = ½ E |x_T − 𝔱(x₀)|².
//
// Sampling is counter-based (one Philox stream per sample index), so results
// are bitwise reproducible for any worker count and any evaluation order.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/dynamics.hpp"
#include "steerkit/linalg.hpp"
#include "steerkit/parallel.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/rng.hpp"
#include "steerkit/target_map.hpp"

namespace steerkit {

struct InitialLaw {
  enum class Kind { Gaussian, PointCloud } kind = Kind::Gaussian;
  Vec<double> mean;                 // Gaussian
  Mat<double> cov;                  // Gaussian (SPD)
  std::vector<Vec<double>> points;  // PointCloud

  static InitialLaw gaussian(Vec<double> mean, Mat<double> cov) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
      throw std::invalid_argument("initial law: mean/cov shape mismatch");
    InitialLaw law;
    law.kind = Kind::Gaussian;
    law.mean = std::move(mean);
    law.cov = std::move(cov);
    return law;
  }

  static InitialLaw standard_gaussian(int n) {
    return gaussian(Vec<double>(n), Mat<double>::identity(n));
  }

  static InitialLaw point_cloud(std::vector<Vec<double>> points) {
    if (points.empty())
      throw std::invalid_argument("initial law: empty point cloud");
    for (const auto& p : points)
      if (p.size() != points.front().size())
        throw std::invalid_argument("initial law: ragged point cloud");
    InitialLaw law;
    law.kind = Kind::PointCloud;
    law.points = std::move(points);
    return law;
  }

  int dim() const {
    return kind == Kind::Gaussian ? mean.size() : points.front().size();
  }
};

// Draw N initial states.  Gaussian draws use stream index = sample index;
// point clouds are cycled deterministically (sample i gets point i mod P).
inline std::vector<Vec<double>> sample_initial(const InitialLaw& law, int N,
                                               std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("sample_initial: N must be >= 1");
  const int n = law.dim();
  std::vector<Vec<double>> out(static_cast<std::size_t>(N), Vec<double>(n));
  if (law.kind == InitialLaw::Kind::PointCloud) {
    const std::size_t P = law.points.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = law.points[i % P];
    return out;
  }
  const Mat<double> L = cholesky(law.cov);
  parallel_for(N, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      SampleStream stream(seed, static_cast<std::uint64_t>(i));
      const Vec<double> z = stream.standard_normal(n);
      Vec<double>& x = out[static_cast<std::size_t>(i)];
      for (int r = 0; r < n; ++r) {
        double acc = law.mean[r];
        for (int c = 0; c <= r; ++c) acc += L(r, c) * z[c];
        x[r] = acc;
      }
    }
  });
  return out;
}

// Flat storage for a rolled-out ensemble: states for stages 0..T, controls
// for stages 0..T-1, and the per-sample target 𝔱(x₀).
struct Ensemble {
  int N = 0, T = 0, n = 0, m = 0;
  std::uint64_t seed = 0;  // seed used for the initial draw (0 for clouds)
  std::vector<double> xs;    // N × (T+1) × n
  std::vector<double> us;    // N × T × m
  std::vector<double> tau0;  // N × n

  Vec<double> x(int i, int t) const {
    Vec<double> v(n);
    const std::size_t base =
        (static_cast<std::size_t>(i) * (T + 1) + static_cast<std::size_t>(t)) * n;
    for (int j = 0; j < n; ++j) v[j] = xs[base + j];
    return v;
  }
  Vec<double> u(int i, int t) const {
    Vec<double> v(m);
    const std::size_t base =
        (static_cast<std::size_t>(i) * T + static_cast<std::size_t>(t)) * m;
    for (int j = 0; j < m; ++j) v[j] = us[base + j];
    return v;
  }
  Vec<double> target(int i) const {
    Vec<double> v(n);
    const std::size_t base = static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) v[j] = tau0[base + j];
    return v;
  }
};

namespace detail {
inline void check_finite(const Vec<double>& v, const char* what, int sample,
                         int stage) {
  for (int j = 0; j < v.size(); ++j)
    if (!std::isfinite(v[j]))
      throw std::runtime_error(std::string("rollout: non-finite ") + what +
                               " at sample " + std::to_string(sample) +
                               ", stage " + std::to_string(stage));
}
}  // namespace detail

// Roll the closed loop forward from the given initial states, recording the
// whole trajectory, the controls, and the per-sample targets.
inline Ensemble rollout(const DynamicsSchedule& sys, const PolicySchedule& phi,
                        const std::vector<Vec<double>>& x0s,
                        const TargetMap& target, std::uint64_t seed = 0) {
  if (x0s.empty()) throw std::invalid_argument("rollout: empty ensemble");
  check_schedule(phi, sys.n, sys.m);
  if (static_cast<int>(phi.size()) != sys.T)
    throw std::invalid_argument("rollout: schedule length != horizon");

  Ensemble ens;
  ens.N = static_cast<int>(x0s.size());
  ens.T = sys.T;
  ens.n = sys.n;
  ens.m = sys.m;
  ens.seed = seed;
  ens.xs.resize(static_cast<std::size_t>(ens.N) * (sys.T + 1) * sys.n);
  ens.us.resize(static_cast<std::size_t>(ens.N) * sys.T * sys.m);
  ens.tau0.resize(static_cast<std::size_t>(ens.N) * sys.n);

  parallel_for(ens.N, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      Vec<double> x = x0s[static_cast<std::size_t>(i)];
      if (x.size() != sys.n)
        throw std::invalid_argument("rollout: initial state dim mismatch");
      detail::check_finite(x, "state", static_cast<int>(i), 0);
      Vec<double> tgt = target.eval(x);
      for (int j = 0; j < sys.n; ++j)
        ens.tau0[static_cast<std::size_t>(i) * sys.n + j] = tgt[j];
      for (int t = 0; t <= sys.T; ++t) {
        const std::size_t base =
            (static_cast<std::size_t>(i) * (sys.T + 1) + t) * sys.n;
        for (int j = 0; j < sys.n; ++j) ens.xs[base + j] = x[j];
        if (t == sys.T) break;
        Vec<double> u = policy_eval(*phi[t], x);
        detail::check_finite(u, "control", static_cast<int>(i), t);
        const std::size_t ubase =
            (static_cast<std::size_t>(i) * sys.T + t) * sys.m;
        for (int j = 0; j < sys.m; ++j) ens.us[ubase + j] = u[j];
        x = step(sys, t, x, u);
        detail::check_finite(x, "state", static_cast<int>(i), t + 1);
      }
    }
  });
  return ens;
}

// First `count` samples of an ensemble (deterministic subsample for residual
// reporting on large ensembles).
inline Ensemble head(const Ensemble& ens, int count) {
  if (count < 1 || count > ens.N)
    throw std::invalid_argument("head: count out of range");
  Ensemble out;
  out.N = count;
  out.T = ens.T;
  out.n = ens.n;
  out.m = ens.m;
  out.seed = ens.seed;
  out.xs.assign(ens.xs.begin(),
                ens.xs.begin() + static_cast<std::ptrdiff_t>(
                                     static_cast<std::size_t>(count) *
                                     (ens.T + 1) * ens.n));
  out.us.assign(ens.us.begin(),
                ens.us.begin() + static_cast<std::ptrdiff_t>(
                                     static_cast<std::size_t>(count) * ens.T *
                                     ens.m));
  out.tau0.assign(ens.tau0.begin(),
                  ens.tau0.begin() + static_cast<std::ptrdiff_t>(
                                         static_cast<std::size_t>(count) * ens.n));
  return out;
}

// J = ½ E |x_T − 𝔱(x₀)|².  Accumulated sequentially in sample order with
// extended precision: outputs must not depend on the worker count, so
// reductions are never sharded (the sum is a negligible fraction of the
// rollout cost anyway).
inline double objective(const Ensemble& ens) {
  long double total = 0.0L;
  for (std::int64_t i = 0; i < ens.N; ++i) {
    const std::size_t xbase =
        (static_cast<std::size_t>(i) * (ens.T + 1) + ens.T) * ens.n;
    const std::size_t tbase = static_cast<std::size_t>(i) * ens.n;
    for (int j = 0; j < ens.n; ++j) {
      long double d = static_cast<long double>(ens.xs[xbase + j]) -
                      static_cast<long double>(ens.tau0[tbase + j]);
      total += d * d;
    }
  }
  return static_cast<double>(0.5L * total / static_cast<long double>(ens.N));
}

}  // namespace steerkit
