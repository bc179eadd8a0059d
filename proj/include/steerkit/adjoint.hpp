#pragma once

// Ensemble-level adjoint machinery: per-sample costates, optimality-condition
// residuals, and the finite-difference directional derivative of the
// objective (the independent check on the pointwise gradient formula).

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerkit/control_set.hpp"
#include "steerkit/dynamics.hpp"
#include "steerkit/ensemble.hpp"
#include "steerkit/lambda.hpp"
#include "steerkit/parallel.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/target_field.hpp"

namespace steerkit {

// Per-sample closed-loop jacobians q_t (stages 1..T-1, evaluated at x_t) and
// costates p_1..p_T.  p_t conditions on the state one stage earlier
// (conditioning_time(t) == t-1); keeping that index explicit guards against
// off-by-one misuse.
struct AdjointTrace {
  int N = 0, T = 0, n = 0;
  std::vector<double> q;  // N × (T-1) × n × n, slot t-1 holds q_t
  std::vector<double> p;  // N × T × n, slot t-1 holds p_t

  Mat<double> q_at(int i, int t) const {  // 1 <= t <= T-1
    if (t < 1 || t > T - 1) throw std::out_of_range("adjoint trace: q index");
    Mat<double> M(n, n);
    const std::size_t base =
        ((static_cast<std::size_t>(i) * (T - 1)) + (t - 1)) *
        static_cast<std::size_t>(n) * n;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) M(r, c) = q[base + static_cast<std::size_t>(r) * n + c];
    return M;
  }

  Vec<double> p_at(int i, int t) const {  // 1 <= t <= T
    if (t < 1 || t > T) throw std::out_of_range("adjoint trace: p index");
    Vec<double> v(n);
    const std::size_t base =
        ((static_cast<std::size_t>(i) * T) + (t - 1)) * static_cast<std::size_t>(n);
    for (int j = 0; j < n; ++j) v[j] = p[base + j];
    return v;
  }

  // Time index of the state p_t conditions on.
  int conditioning_time(int t) const { return t - 1; }
};

// p_t = [q_t(x_t) ⋯ q_{T-1}(x_{T-1})]ᵀ (x_T − τ_{t-1}(x_{t-1})) per sample.
//
// When the base x_T − τ does not depend on t (constant targets, or the
// per-sample surrogate), costates telescope exactly: p_T is formed once and
// each earlier costate is one qᵀ pull-back — so the pathwise identity
// p_t = q_tᵀ p_{t+1} holds bitwise.  Stage-varying estimators (knn) get the
// full product formula via backward matrix accumulation instead.
inline AdjointTrace costates(const Ensemble& ens, const DynamicsSchedule& sys,
                             const PolicySchedule& phi,
                             const TargetField& field) {
  if (ens.T != sys.T || ens.n != sys.n || ens.m != sys.m)
    throw std::invalid_argument("costates: ensemble/system shape mismatch");
  check_schedule(phi, sys.n, sys.m);
  if (static_cast<int>(phi.size()) != sys.T)
    throw std::invalid_argument("costates: schedule length != horizon");

  AdjointTrace trace;
  trace.N = ens.N;
  trace.T = sys.T;
  trace.n = sys.n;
  trace.q.resize(static_cast<std::size_t>(ens.N) * (sys.T - 1) * sys.n * sys.n);
  trace.p.resize(static_cast<std::size_t>(ens.N) * sys.T * sys.n);

  const bool telescoped = !field.time_varying();
  parallel_for(ens.N, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      // Closed-loop jacobians at the stored states.
      std::vector<Mat<double>> qs(static_cast<std::size_t>(sys.T));
      for (int t = 1; t <= sys.T - 1; ++t) {
        qs[t] = q_matrix(sys, phi, t, ens.x(static_cast<int>(i), t));
        const std::size_t base =
            ((static_cast<std::size_t>(i) * (sys.T - 1)) + (t - 1)) *
            static_cast<std::size_t>(sys.n) * sys.n;
        for (int r = 0; r < sys.n; ++r)
          for (int c = 0; c < sys.n; ++c)
            trace.q[base + static_cast<std::size_t>(r) * sys.n + c] = qs[t](r, c);
      }
      const Vec<double> xT = ens.x(static_cast<int>(i), sys.T);
      auto store_p = [&](int t, const Vec<double>& v) {
        const std::size_t base =
            ((static_cast<std::size_t>(i) * sys.T) + (t - 1)) *
            static_cast<std::size_t>(sys.n);
        for (int j = 0; j < sys.n; ++j) trace.p[base + j] = v[j];
      };
      if (telescoped) {
        Vec<double> tau = field.per_sample()
                              ? ens.target(static_cast<int>(i))
                              : field_tau(field, 0, ens.x(static_cast<int>(i), 0));
        Vec<double> p(sys.n);
        for (int j = 0; j < sys.n; ++j) p[j] = xT[j] - tau[j];
        store_p(sys.T, p);
        for (int t = sys.T - 1; t >= 1; --t) {
          p = matTvec(qs[t], p);
          store_p(t, p);
        }
      } else {
        // M_t = q_tᵀ M_{t+1}, M_T = I; p_t = M_t (x_T − τ_{t-1}(x_{t-1})).
        Mat<double> M = Mat<double>::identity(sys.n);
        for (int t = sys.T; t >= 1; --t) {
          if (t < sys.T) M = matmul(transpose(qs[t]), M);
          Vec<double> tau =
              field_tau(field, t - 1, ens.x(static_cast<int>(i), t - 1));
          Vec<double> base(sys.n);
          for (int j = 0; j < sys.n; ++j) base[j] = xT[j] - tau[j];
          store_p(t, matvec(M, base));
        }
      }
    }
  });
  return trace;
}

namespace detail {

// Deterministic RMS over per-sample squared contributions: the squares are
// computed in parallel by index, the reduction is sequential.
inline double rms_reduce(const std::vector<double>& sq) {
  long double acc = 0.0L;
  for (double v : sq) acc += static_cast<long double>(v);
  return std::sqrt(static_cast<double>(acc / static_cast<long double>(sq.size())));
}

}  // namespace detail

// Per-stage optimality residual, t = 0..T-1: the root-mean-square distance
// from −(∂f_t/∂u)ᵀ p_{t+1} to the normal cone of U at the applied control.
// Zero everywhere iff the ensemble satisfies the first-order condition.
inline std::vector<double> stationarity_residual(const AdjointTrace& trace,
                                                 const DynamicsSchedule& sys,
                                                 const PolicySchedule& phi,
                                                 const Ensemble& ens,
                                                 const ControlSet& U) {
  check_schedule(phi, sys.n, sys.m);
  if (trace.N != ens.N || trace.T != ens.T)
    throw std::invalid_argument("stationarity: trace/ensemble mismatch");
  std::vector<double> out(static_cast<std::size_t>(sys.T));
  std::vector<double> sq(static_cast<std::size_t>(ens.N));
  for (int t = 0; t < sys.T; ++t) {
    parallel_for(ens.N, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const Vec<double> x = ens.x(static_cast<int>(i), t);
        const Vec<double> u = ens.u(static_cast<int>(i), t);
        const Mat<double> B = jac_u(sys, t, x, u);
        const Vec<double> g = matTvec(B, trace.p_at(static_cast<int>(i), t + 1));
        Vec<double> neg(g.size());
        for (int j = 0; j < g.size(); ++j) neg[j] = -g[j];
        const double d = dist_to_normal_cone(U, u, neg);
        sq[static_cast<std::size_t>(i)] = d * d;
      }
    });
    out[static_cast<std::size_t>(t)] = detail::rms_reduce(sq);
  }
  return out;
}

// Per-stage adjoint-recurrence residual, t = 1..T-1 (returned at index t-1):
// RMS of |p_t − (∂f_t/∂x)ᵀ p_{t+1}|.  By the pathwise identity this equals
// the RMS of |(∂φ_t/∂x)ᵀ (∂f_t/∂u)ᵀ p_{t+1}| — the orthogonality defect.
inline std::vector<double> recurrence_residual(const AdjointTrace& trace,
                                               const DynamicsSchedule& sys,
                                               const PolicySchedule& phi,
                                               const Ensemble& ens) {
  check_schedule(phi, sys.n, sys.m);
  if (trace.N != ens.N || trace.T != ens.T)
    throw std::invalid_argument("recurrence: trace/ensemble mismatch");
  std::vector<double> out(static_cast<std::size_t>(sys.T - 1));
  std::vector<double> sq(static_cast<std::size_t>(ens.N));
  for (int t = 1; t <= sys.T - 1; ++t) {
    parallel_for(ens.N, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const Vec<double> x = ens.x(static_cast<int>(i), t);
        const Vec<double> u = ens.u(static_cast<int>(i), t);
        const Mat<double> A = jac_x(sys, t, x, u);
        const Vec<double> ahead = matTvec(A, trace.p_at(static_cast<int>(i), t + 1));
        const Vec<double> pt = trace.p_at(static_cast<int>(i), t);
        double d2 = 0.0;
        for (int j = 0; j < sys.n; ++j) {
          const double d = pt[j] - ahead[j];
          d2 += d * d;
        }
        sq[static_cast<std::size_t>(i)] = d2;
      }
    });
    out[static_cast<std::size_t>(t - 1)] = detail::rms_reduce(sq);
  }
  return out;
}

// E⟨[∇J]_τ(x_τ), ψ(x_τ) − φ_τ(x_τ)⟩ over the ensemble: the formula side of
// the directional derivative.
inline double gateaux_formula(const DynamicsSchedule& sys,
                              const PolicySchedule& phi,
                              const TargetField& field, const Ensemble& ens,
                              int tau, const PolicyNode& psi) {
  if (tau < 0 || tau >= sys.T)
    throw std::out_of_range("gateaux: stage index");
  if (psi.in_dim() != sys.n || psi.out_dim() != sys.m)
    throw std::invalid_argument("gateaux: direction policy shape mismatch");
  std::vector<double> terms(static_cast<std::size_t>(ens.N));
  parallel_for(ens.N, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const Vec<double> x = ens.x(static_cast<int>(i), tau);
      const Vec<double> g = synthetic_gradient(sys, phi, field, tau, x);
      const Vec<double> u = ens.u(static_cast<int>(i), tau);
      const Vec<double> w = policy_eval(psi, x);
      double acc = 0.0;
      for (int j = 0; j < sys.m; ++j) acc += g[j] * (w[j] - u[j]);
      terms[static_cast<std::size_t>(i)] = acc;
    }
  });
  long double total = 0.0L;
  for (double v : terms) total += static_cast<long double>(v);
  return static_cast<double>(total / static_cast<long double>(ens.N));
}

// Finite-difference estimate of d/dε J(φ with stage τ blended toward ψ) at
// ε = 0⁺ on a fixed initial cloud, Richardson-extrapolated over eps_list.
// Differences are central when U is the full space (both signs feasible),
// one-sided otherwise.
inline double gateaux_fd(const DynamicsSchedule& sys, const PolicySchedule& phi,
                         const TargetMap& target,
                         const std::vector<Vec<double>>& x0s, int tau,
                         const PolicyPtr& psi,
                         const std::vector<double>& eps_list,
                         const ControlSet& U = ControlSet::full_space()) {
  if (tau < 0 || tau >= sys.T)
    throw std::out_of_range("gateaux: stage index");
  if (eps_list.empty())
    throw std::invalid_argument("gateaux: empty epsilon list");
  for (double e : eps_list)
    if (!(e > 0.0) || !(e <= 1.0))
      throw std::invalid_argument("gateaux: epsilon must lie in (0, 1]");
  if (!psi) throw std::invalid_argument("gateaux: null direction policy");

  const bool central = U.kind == ControlSet::Kind::FullSpace;
  auto J_at = [&](double eps) {
    PolicySchedule blend = phi;
    blend[static_cast<std::size_t>(tau)] =
        std::make_shared<BlendPolicy>(phi[static_cast<std::size_t>(tau)], psi, eps);
    return objective(rollout(sys, blend, x0s, target));
  };

  const double J0 = central ? 0.0 : J_at(0.0);
  std::vector<double> h(eps_list.size()), d(eps_list.size());
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double e = eps_list[i];
    if (central) {
      d[i] = (J_at(e) - J_at(-e)) / (2.0 * e);
      h[i] = e * e;  // central differences have even error expansion
    } else {
      d[i] = (J_at(e) - J0) / e;
      h[i] = e;
    }
    if (!std::isfinite(d[i]))
      throw std::runtime_error("gateaux: non-finite difference quotient");
  }
  // Neville extrapolation of the samples (h_i, d_i) to h = 0.
  const std::size_t k = d.size();
  for (std::size_t level = 1; level < k; ++level)
    for (std::size_t i = 0; i + level < k; ++i)
      d[i] = d[i + 1] + (d[i + 1] - d[i]) * h[i + level] / (h[i] - h[i + level]);
  return d[0];
}

// Nonparametric conditional-target estimator fitted on a rolled ensemble:
// stage-t queries average the stored targets of the k nearest stage-t states.
inline std::shared_ptr<const KnnField> fit_knn_field(const Ensemble& ens, int k) {
  std::vector<std::vector<double>> points(static_cast<std::size_t>(ens.T));
  for (int t = 0; t < ens.T; ++t) {
    std::vector<double>& cloud = points[static_cast<std::size_t>(t)];
    cloud.resize(static_cast<std::size_t>(ens.N) * ens.n);
    for (int i = 0; i < ens.N; ++i) {
      const std::size_t src =
          (static_cast<std::size_t>(i) * (ens.T + 1) + t) * ens.n;
      for (int j = 0; j < ens.n; ++j)
        cloud[static_cast<std::size_t>(i) * ens.n + j] = ens.xs[src + j];
    }
  }
  return std::make_shared<KnnField>(k, ens.n, std::move(points), ens.tau0);
}

}  // namespace steerkit
