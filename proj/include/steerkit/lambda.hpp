#pragma once

// Pointwise adjoint quantities of the closed loop x_{s+1} = f_s(x_s, φ_s(x_s)):
//
//  * q_matrix          — closed-loop jacobian q_s(x) = ∂/∂x f_s(x, φ_s(x)).
//  * lambda_field      — λ_t(x): terminal mismatch of the tail launched by
//    conditioning on x_{t-1} = x, pulled back through qᵀ factors of stages
//    t..T-1.  The target is read at the conditioning point, τ_{t-1}(x).
//  * synthetic_gradient — the pointwise objective gradient in the stage-t
//    control, [∇J]_t(x) = (∂f_t/∂u)ᵀ λ_{t+1}(x).
//
// All of these differentiate through policies and dynamics by evaluating at
// one ladder level above their argument, so they are themselves evaluable at
// any level with headroom; `if constexpr` guards stop instantiation at the
// ladder top and raise a runtime error instead.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/dynamics.hpp"
#include "steerkit/jet.hpp"
#include "steerkit/ladder.hpp"
#include "steerkit/linalg.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/target_field.hpp"

namespace steerkit {

template <class S>
struct ClosedLoopStep {
  Vec<S> x_next;  // f_t(x, φ_t(x))
  Mat<S> q;       // ∂/∂x f_t(x, φ_t(x)), n×n
};

// One seeded pass produces the next state and the closed-loop jacobian.
template <class S>
ClosedLoopStep<S> step_closed_loop(const DynamicsSchedule& sys,
                                   const PolicyNode& phi_t, int t,
                                   const Vec<S>& x) {
  if constexpr (ladder_index_v<S> >= kMaxLadder) {
    (void)sys; (void)phi_t; (void)t; (void)x;
    throw std::runtime_error("adjoint: tangent ladder exhausted");
  } else {
    Vec<Dual<S>> xd = seed_identity(x);
    Vec<Dual<S>> ud = policy_eval(phi_t, xd);
    Vec<Dual<S>> xn = step(sys, t, xd, ud);
    return {values_of(xn), tangents_of(xn, x.size())};
  }
}

template <class S = double>
Mat<S> q_matrix(const DynamicsSchedule& sys, const PolicySchedule& phi, int t,
                const Vec<S>& x) {
  if (t < 0 || t >= sys.T) throw std::out_of_range("q_matrix: stage index");
  return step_closed_loop<S>(sys, *phi[t], t, x).q;
}

namespace detail {

// λ_{tc+1}(x) with the stage-tc control already evaluated.  `tc` is the
// conditioning stage: the rollout starts from x_{tc} = x, and only stages
// strictly after tc contribute qᵀ factors.
template <class S>
Vec<S> lambda_tail(const DynamicsSchedule& sys, const PolicySchedule& phi,
                   const TargetField& field, int tc, const Vec<S>& x,
                   const Vec<S>& u_tc) {
  if constexpr (ladder_index_v<S> >= kMaxLadder) {
    (void)sys; (void)phi; (void)field; (void)tc; (void)x; (void)u_tc;
    throw std::runtime_error("adjoint: tangent ladder exhausted");
  } else {
    const int T = sys.T;
    const int n = sys.n;
    Vec<S> tau = field_tau(field, tc, x);
    Vec<S> x_cur = step(sys, tc, x, u_tc);
    std::vector<Mat<S>> qs;
    qs.reserve(static_cast<std::size_t>(T - 1 - tc));
    for (int s = tc + 1; s < T; ++s) {
      ClosedLoopStep<S> cl = step_closed_loop<S>(sys, *phi[s], s, x_cur);
      qs.push_back(std::move(cl.q));
      x_cur = std::move(cl.x_next);
    }
    Vec<S> w(n);
    for (int i = 0; i < n; ++i) w[i] = x_cur[i] - tau[i];
    for (int s = T - 1; s > tc; --s) w = matTvec(qs[s - tc - 1], w);
    return w;
  }
}

}  // namespace detail

// λ_t(x) for 1 <= t <= T.
template <class S = double>
Vec<S> lambda_field(const DynamicsSchedule& sys, const PolicySchedule& phi,
                    const TargetField& field, int t, const Vec<S>& x) {
  if (t < 1 || t > sys.T)
    throw std::out_of_range("lambda_field: time index must be in [1, T]");
  const int tc = t - 1;
  Vec<S> u = policy_eval(*phi[tc], x);
  return detail::lambda_tail(sys, phi, field, tc, x, u);
}

// [∇J]_t(x) = (∂f_t/∂u)ᵀ λ_{t+1}(x) for 0 <= t <= T-1.
template <class S = double>
Vec<S> synthetic_gradient(const DynamicsSchedule& sys,
                          const PolicySchedule& phi, const TargetField& field,
                          int t, const Vec<S>& x) {
  if (t < 0 || t >= sys.T)
    throw std::out_of_range("synthetic_gradient: stage index");
  if constexpr (ladder_index_v<S> >= kMaxLadder) {
    (void)x;
    throw std::runtime_error("adjoint: tangent ladder exhausted");
  } else {
    Vec<S> u = policy_eval(*phi[t], x);
    Vec<S> lam = detail::lambda_tail(sys, phi, field, t, x, u);
    Mat<S> B = jac_u(sys, t, x, u);
    return matTvec(B, lam);
  }
}

}  // namespace steerkit
