#pragma once

// Feedback-policy nodes.  A policy φ_t: ℝⁿ → ℝᵐ is a heap-allocated node
// evaluable at every scalar level of the tangent ladder, so callers can
// differentiate through it by feeding seeded inputs.  `depth()` reports how
// many additional ladder levels an evaluation at level S consumes
// internally (descent-step nodes re-differentiate their ancestors); nodes
// must be evaluated only at levels S with ladder_index(S) + depth() within
// the ladder, and helpers below enforce that.

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/control_set.hpp"
#include "steerkit/jet.hpp"
#include "steerkit/ladder.hpp"
#include "steerkit/linalg.hpp"

namespace steerkit {

class PolicyNode {
 public:
  virtual ~PolicyNode() = default;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  // Ladder levels consumed internally above the evaluation level.
  virtual int depth() const { return 0; }

#define X(S) virtual void eval(const Vec<S>& x, Vec<S>& out) const = 0;
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X
};

using PolicyPtr = std::shared_ptr<const PolicyNode>;
using PolicySchedule = std::vector<PolicyPtr>;

namespace detail {
inline void check_policy_level(const PolicyNode& node, int level) {
  if (level + node.depth() > kMaxLadder)
    throw std::runtime_error(
        "policy: evaluation at tangent level " + std::to_string(level) +
        " needs " + std::to_string(level + node.depth()) +
        " ladder levels, but only " + std::to_string(kMaxLadder) +
        " are available; snapshot the policy to reset its depth");
}
}  // namespace detail

// φ(x), with a level/depth guard.
template <class S>
Vec<S> policy_eval(const PolicyNode& node, const Vec<S>& x) {
  detail::check_policy_level(node, ladder_index_v<S>);
  Vec<S> out;
  node.eval(x, out);
  return out;
}

// ∂φ/∂x at x, an m×n matrix at level S (one seeded pass at Dual<S>).
template <class S = double>
Mat<S> policy_jac(const PolicyNode& node, const Vec<S>& x) {
  detail::check_policy_level(node, ladder_index_v<S> + 1);
  if constexpr (ladder_index_v<S> >= kMaxLadder) {
    throw std::logic_error("policy: jacobian above ladder top");
  } else {
    auto xd = seed_identity(x);
    Vec<Dual<S>> ud;
    node.eval(xd, ud);
    return tangents_of(ud, x.size());
  }
}

// CRTP adapter generating the per-level virtuals from one template body.
template <class Derived>
class PolicyNodeBase : public PolicyNode {
 public:
#define X(S)                                                   \
  void eval(const Vec<S>& x, Vec<S>& out) const override {     \
    static_cast<const Derived*>(this)->eval_impl(x, out);      \
  }
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X
};

// --- affine feedback: φ(x) = A x + b -------------------------------------

class LinearPolicy final : public PolicyNodeBase<LinearPolicy> {
 public:
  LinearPolicy(Mat<double> A, Vec<double> b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != b_.size())
      throw std::invalid_argument("policy: A/b shape mismatch");
  }

  int in_dim() const override { return A_.cols(); }
  int out_dim() const override { return A_.rows(); }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    if (x.size() != A_.cols())
      throw std::invalid_argument("policy: input dim mismatch");
    out = Vec<S>(A_.rows());
    for (int i = 0; i < A_.rows(); ++i) {
      S acc(b_[i]);
      for (int j = 0; j < A_.cols(); ++j) acc = acc + A_(i, j) * x[j];
      out[i] = acc;
    }
  }

  const Mat<double>& A() const { return A_; }
  const Vec<double>& b() const { return b_; }

 private:
  Mat<double> A_;
  Vec<double> b_;
};

// --- constant control ------------------------------------------------------

class ConstantPolicy final : public PolicyNodeBase<ConstantPolicy> {
 public:
  ConstantPolicy(int n, Vec<double> c) : n_(n), c_(std::move(c)) {}

  int in_dim() const override { return n_; }
  int out_dim() const override { return c_.size(); }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    if (x.size() != n_)
      throw std::invalid_argument("policy: input dim mismatch");
    out = Vec<S>(c_.size());
    for (int i = 0; i < c_.size(); ++i) out[i] = S(c_[i]);
  }

 private:
  int n_;
  Vec<double> c_;
};

// --- first-coordinate readout: φ(p, q) = p ---------------------------------

class FirstCoordinatePolicy final
    : public PolicyNodeBase<FirstCoordinatePolicy> {
 public:
  explicit FirstCoordinatePolicy(int n = 2) : n_(n) {
    if (n_ < 1) throw std::invalid_argument("policy: n must be >= 1");
  }

  int in_dim() const override { return n_; }
  int out_dim() const override { return 1; }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    if (x.size() != n_)
      throw std::invalid_argument("policy: input dim mismatch");
    out = Vec<S>(1);
    out[0] = x[0];
  }

 private:
  int n_;
};

// --- arbitrary ladder-polymorphic callable ---------------------------------

template <class F>
class CallablePolicy final : public PolicyNodeBase<CallablePolicy<F>> {
 public:
  CallablePolicy(int n, int m, F f, int depth = 0)
      : n_(n), m_(m), depth_(depth), f_(std::move(f)) {}

  int in_dim() const override { return n_; }
  int out_dim() const override { return m_; }
  int depth() const override { return depth_; }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    if (x.size() != n_)
      throw std::invalid_argument("policy: input dim mismatch");
    out = f_(x);
    if (out.size() != m_)
      throw std::logic_error("policy: callable produced wrong output dim");
  }

 private:
  int n_;
  int m_;
  int depth_;
  F f_;
};

template <class F>
PolicyPtr make_policy(int n, int m, F f, int depth = 0) {
  return std::make_shared<CallablePolicy<F>>(n, m, std::move(f), depth);
}

// --- convex blend: φ(x) = a(x) + ε (b(x) − a(x)) ----------------------------
//
// Used to probe directional derivatives of the objective; deliberately does
// NOT re-project, so the perturbation direction is exactly b − a.

class BlendPolicy final : public PolicyNodeBase<BlendPolicy> {
 public:
  BlendPolicy(PolicyPtr a, PolicyPtr b, double eps)
      : a_(std::move(a)), b_(std::move(b)), eps_(eps) {
    if (!a_ || !b_) throw std::invalid_argument("policy: null blend operand");
    if (a_->in_dim() != b_->in_dim() || a_->out_dim() != b_->out_dim())
      throw std::invalid_argument("policy: blend shape mismatch");
  }

  int in_dim() const override { return a_->in_dim(); }
  int out_dim() const override { return a_->out_dim(); }
  int depth() const override { return std::max(a_->depth(), b_->depth()); }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    Vec<S> ua, ub;
    a_->eval(x, ua);
    b_->eval(x, ub);
    out = Vec<S>(ua.size());
    for (int i = 0; i < ua.size(); ++i)
      out[i] = ua[i] + eps_ * (ub[i] - ua[i]);
  }

 private:
  PolicyPtr a_;
  PolicyPtr b_;
  double eps_;
};

// --- pointwise projection wrapper: φ(x) = Π_U(inner(x)) ---------------------

class ProjectPolicy final : public PolicyNodeBase<ProjectPolicy> {
 public:
  ProjectPolicy(PolicyPtr inner, ControlSet set)
      : inner_(std::move(inner)), set_(std::move(set)) {
    if (!inner_) throw std::invalid_argument("policy: null projection operand");
    if (set_.kind != ControlSet::Kind::FullSpace &&
        set_.dim() != inner_->out_dim())
      throw std::invalid_argument("policy: control-set dim mismatch");
  }

  int in_dim() const override { return inner_->in_dim(); }
  int out_dim() const override { return inner_->out_dim(); }
  int depth() const override { return inner_->depth(); }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    Vec<S> u;
    inner_->eval(x, u);
    out = project_point(set_, u);
  }

 private:
  PolicyPtr inner_;
  ControlSet set_;
};

// Schedule helpers ------------------------------------------------------

inline int schedule_depth(const PolicySchedule& phi) {
  int d = 0;
  for (const auto& node : phi) d = std::max(d, node ? node->depth() : 0);
  return d;
}

inline void check_schedule(const PolicySchedule& phi, int n, int m) {
  for (std::size_t t = 0; t < phi.size(); ++t) {
    if (!phi[t])
      throw std::invalid_argument("policy: schedule slot " + std::to_string(t) +
                                  " is empty");
    if (phi[t]->in_dim() != n || phi[t]->out_dim() != m)
      throw std::invalid_argument("policy: schedule slot " + std::to_string(t) +
                                  " has wrong dimensions");
  }
}

}  // namespace steerkit
