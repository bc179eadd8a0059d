#pragma once

// The projected-descent policy node: φ'_t(x) = Π_U(φ_t(x) − α [∇J]_t(x)).
//
// The node captures the full previous schedule lazily — evaluating the
// updated stage-t policy at x re-derives the synthetic gradient there, which
// re-differentiates every ancestor node along the tail.  Depth therefore
// grows with iteration count (see `depth()`); freezing an iterate onto a
// grid (snapshot.hpp) resets it.

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <utility>

#include "steerkit/control_set.hpp"
#include "steerkit/dynamics.hpp"
#include "steerkit/lambda.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/target_field.hpp"

namespace steerkit {

// Everything a descent step needs besides the incumbent policies.
struct GradientContext {
  SchedulePtr system;
  TargetFieldPtr field;
  ControlSet control_set = ControlSet::full_space();
};

class GradStepPolicy final : public PolicyNodeBase<GradStepPolicy> {
 public:
  GradStepPolicy(PolicySchedule prev, int t, double alpha, GradientContext ctx)
      : prev_(std::move(prev)), t_(t), alpha_(alpha), ctx_(std::move(ctx)) {
    if (!ctx_.system) throw std::invalid_argument("grad step: null system");
    if (!ctx_.field) throw std::invalid_argument("grad step: null target field");
    const auto& sys = *ctx_.system;
    if (static_cast<int>(prev_.size()) != sys.T)
      throw std::invalid_argument("grad step: schedule length != horizon");
    if (t_ < 0 || t_ >= sys.T)
      throw std::out_of_range("grad step: stage index");
    check_schedule(prev_, sys.n, sys.m);
    if (ctx_.control_set.kind != ControlSet::Kind::FullSpace &&
        ctx_.control_set.dim() != sys.m)
      throw std::invalid_argument("grad step: control-set dim mismatch");
    // Levels consumed: the incumbent at stage t runs at the caller's level;
    // the ∂f/∂u jacobian always costs one; tail policies (stages > t) run
    // one level up inside the closed-loop jacobians.
    int tail = 0;
    for (int s = t_ + 1; s < sys.T; ++s)
      tail = std::max(tail, prev_[s]->depth());
    depth_ = std::max(prev_[t_]->depth(), 1 + tail);
  }

  int in_dim() const override { return ctx_.system->n; }
  int out_dim() const override { return ctx_.system->m; }
  int depth() const override { return depth_; }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    if constexpr (ladder_index_v<S> >= kMaxLadder) {
      (void)x; (void)out;
      throw std::runtime_error("grad step: tangent ladder exhausted");
    } else {
      const auto& sys = *ctx_.system;
      Vec<S> u = policy_eval(*prev_[t_], x);
      Vec<S> lam = detail::lambda_tail(sys, prev_, *ctx_.field, t_, x, u);
      Mat<S> B = jac_u(sys, t_, x, u);
      Vec<S> g = matTvec(B, lam);
      Vec<S> cand(u.size());
      for (int i = 0; i < u.size(); ++i) cand[i] = u[i] - alpha_ * g[i];
      out = project_point(ctx_.control_set, cand);
    }
  }

  const PolicySchedule& previous() const { return prev_; }
  double alpha() const { return alpha_; }

 private:
  PolicySchedule prev_;
  int t_;
  double alpha_;
  GradientContext ctx_;
  int depth_ = 1;
};

// One full projected-descent sweep: every stage steps against the SAME
// incumbent schedule (a Jacobi update, not Gauss–Seidel).
inline PolicySchedule grad_step(const PolicySchedule& prev, double alpha,
                                const GradientContext& ctx) {
  PolicySchedule next(prev.size());
  for (std::size_t t = 0; t < prev.size(); ++t)
    next[t] = std::make_shared<GradStepPolicy>(prev, static_cast<int>(t),
                                               alpha, ctx);
  return next;
}

}  // namespace steerkit
