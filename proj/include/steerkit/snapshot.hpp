#pragma once

// Freezing a policy onto a rectangular grid.  The snapshot stores, at every
// grid node, the source policy's value AND its exact input jacobian.  Between
// nodes both tables are interpolated multilinearly; the returned scalar at a
// tangent level carries
//
//     value   = interpolated value table (recursively, level by level),
//     tangent = (interpolated jacobian table at the core point) · x-tangent.
//
// First derivatives therefore come from the stored analytic jacobians rather
// than from differentiating the interpolant, and all higher derivatives
// vanish (the jacobian is treated as locally constant).  Queries outside the
// grid clamp to the boundary: the value saturates and the clamped coordinate
// columns of the jacobian are zeroed, matching the clamped value's true
// (vanishing) sensitivity.  A counter records how many evaluations clamped.
//
// A snapshot has depth 0 — it ends re-differentiation chains, which is how
// long descent runs stay within the finite tangent ladder.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/policy.hpp"

namespace steerkit {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;  // number of nodes (>= 2), uniformly spaced
};

class GridSnapshotPolicy final : public PolicyNodeBase<GridSnapshotPolicy> {
 public:
  GridSnapshotPolicy(const PolicyNode& source, std::vector<GridAxis> axes)
      : n_(static_cast<int>(axes.size())),
        m_(source.out_dim()),
        axes_(std::move(axes)) {
    if (n_ != source.in_dim())
      throw std::invalid_argument("snapshot: grid/source dim mismatch");
    total_ = 1;
    for (const GridAxis& a : axes_) {
      if (a.count < 2)
        throw std::invalid_argument("snapshot: axis needs >= 2 nodes");
      if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
        throw std::invalid_argument("snapshot: axis bounds invalid");
      total_ *= static_cast<std::size_t>(a.count);
    }
    detail::check_policy_level(source, 1);  // node jacobians differentiate once
    values_.resize(total_ * static_cast<std::size_t>(m_));
    jacs_.resize(total_ * static_cast<std::size_t>(m_) *
                 static_cast<std::size_t>(n_));
    std::vector<int> idx(n_, 0);
    Vec<double> xn(n_);
    for (std::size_t flat = 0; flat < total_; ++flat) {
      std::size_t rem = flat;
      for (int j = n_ - 1; j >= 0; --j) {
        idx[j] = static_cast<int>(rem % axes_[j].count);
        rem /= axes_[j].count;
      }
      for (int j = 0; j < n_; ++j) xn[j] = node_coord(j, idx[j]);
      Vec<Dual<double>> out;
      source.eval(seed_identity(xn), out);
      if (static_cast<int>(out.size()) != m_)
        throw std::logic_error("snapshot: source output dim changed");
      Mat<double> J = tangents_of(out, n_);
      for (int i = 0; i < m_; ++i) {
        values_[flat * m_ + i] = core(out[i]);
        for (int j = 0; j < n_; ++j)
          jacs_[(flat * m_ + i) * n_ + j] = J(i, j);
      }
    }
  }

  int in_dim() const override { return n_; }
  int out_dim() const override { return m_; }
  int depth() const override { return 0; }

  std::uint64_t clamp_count() const {
    return clamps_.load(std::memory_order_relaxed);
  }
  const std::vector<GridAxis>& axes() const { return axes_; }

  template <class S>
  void eval_impl(const Vec<S>& x, Vec<S>& out) const {
    eval_peel(x, out, /*count_clamp=*/true);
  }

 private:
  struct Locate {
    std::vector<int> cell;       // lower node index per axis
    std::vector<double> w;       // fractional position in [0, 1]
    std::vector<char> clamped;   // axis clamped to the boundary?
    bool any_clamped = false;
  };

  double node_coord(int axis, int i) const {
    const GridAxis& a = axes_[axis];
    double h = (a.hi - a.lo) / static_cast<double>(a.count - 1);
    return a.lo + h * static_cast<double>(i);
  }

  Locate locate(const Vec<double>& xc) const {
    Locate loc;
    loc.cell.resize(n_);
    loc.w.resize(n_);
    loc.clamped.assign(n_, 0);
    for (int j = 0; j < n_; ++j) {
      const GridAxis& a = axes_[j];
      double h = (a.hi - a.lo) / static_cast<double>(a.count - 1);
      double pos = (xc[j] - a.lo) / h;
      double c = std::floor(pos);
      if (c < 0.0) c = 0.0;
      if (c > static_cast<double>(a.count - 2))
        c = static_cast<double>(a.count - 2);
      double w = pos - c;
      if (w < 0.0 || w > 1.0) {
        loc.clamped[j] = 1;
        loc.any_clamped = true;
        w = w < 0.0 ? 0.0 : 1.0;
      }
      loc.cell[j] = static_cast<int>(c);
      loc.w[j] = w;
    }
    return loc;
  }

  std::size_t flat_index(const Locate& loc, unsigned corner_mask) const {
    std::size_t flat = 0;
    for (int j = 0; j < n_; ++j) {
      int node = loc.cell[j] + ((corner_mask >> j) & 1u);
      flat = flat * static_cast<std::size_t>(axes_[j].count) +
             static_cast<std::size_t>(node);
    }
    return flat;
  }

  Vec<double> interp_values(const Locate& loc) const {
    Vec<double> out(m_);
    const unsigned corners = 1u << n_;
    for (unsigned mask = 0; mask < corners; ++mask) {
      double weight = 1.0;
      for (int j = 0; j < n_; ++j)
        weight *= ((mask >> j) & 1u) ? loc.w[j] : 1.0 - loc.w[j];
      if (weight == 0.0) continue;
      std::size_t base = flat_index(loc, mask) * static_cast<std::size_t>(m_);
      for (int i = 0; i < m_; ++i) out[i] += weight * values_[base + i];
    }
    return out;
  }

  Mat<double> interp_jac(const Locate& loc) const {
    Mat<double> J(m_, n_);
    const unsigned corners = 1u << n_;
    for (unsigned mask = 0; mask < corners; ++mask) {
      double weight = 1.0;
      for (int j = 0; j < n_; ++j)
        weight *= ((mask >> j) & 1u) ? loc.w[j] : 1.0 - loc.w[j];
      if (weight == 0.0) continue;
      std::size_t base = flat_index(loc, mask) * static_cast<std::size_t>(m_) *
                         static_cast<std::size_t>(n_);
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < n_; ++j)
          J(i, j) += weight * jacs_[base + static_cast<std::size_t>(i) * n_ + j];
    }
    for (int j = 0; j < n_; ++j)
      if (loc.clamped[j])
        for (int i = 0; i < m_; ++i) J(i, j) = 0.0;
    return J;
  }

  void eval_peel(const Vec<double>& x, Vec<double>& out,
                 bool count_clamp) const {
    if (x.size() != n_)
      throw std::invalid_argument("snapshot: input dim mismatch");
    Locate loc = locate(x);
    if (count_clamp && loc.any_clamped)
      clamps_.fetch_add(1, std::memory_order_relaxed);
    out = interp_values(loc);
  }

  template <class S>
  void eval_peel(const Vec<Dual<S>>& x, Vec<Dual<S>>& out,
                 bool count_clamp) const {
    if (x.size() != n_)
      throw std::invalid_argument("snapshot: input dim mismatch");
    // Peel one level: recurse on the value parts, then attach tangents
    // through the interpolated jacobian frozen at the core point.
    Vec<S> xv(n_);
    for (int j = 0; j < n_; ++j) xv[j] = x[j].value();
    Vec<S> ov;
    eval_peel(xv, ov, count_clamp);

    Vec<double> xc(n_);
    for (int j = 0; j < n_; ++j) xc[j] = core(x[j]);
    Mat<double> J = interp_jac(locate(xc));

    int width = 0;
    for (int j = 0; j < n_; ++j) {
      int wj = x[j].width();
      if (wj != 0) {
        if (width != 0 && width != wj)
          throw std::logic_error("snapshot: mixed tangent widths");
        width = wj;
      }
    }
    out = Vec<Dual<S>>(m_);
    for (int i = 0; i < m_; ++i) {
      Dual<S> r(ov[i]);
      r.set_width(width);
      for (int k = 0; k < width; ++k) {
        S acc(0.0);
        for (int j = 0; j < n_; ++j)
          if (x[j].width() != 0) acc = acc + J(i, j) * x[j].tangent(k);
        r.tangent(k) = acc;
      }
      out[i] = std::move(r);
    }
  }

  int n_;
  int m_;
  std::vector<GridAxis> axes_;
  std::size_t total_ = 0;
  std::vector<double> values_;  // node-major, then output index
  std::vector<double> jacs_;    // node-major, then (row i, col j)
  mutable std::atomic<std::uint64_t> clamps_{0};
};

inline PolicyPtr snapshot(const PolicyNode& source, std::vector<GridAxis> axes) {
  return std::make_shared<GridSnapshotPolicy>(source, std::move(axes));
}

inline PolicySchedule snapshot_schedule(const PolicySchedule& phi,
                                        const std::vector<GridAxis>& axes) {
  PolicySchedule out(phi.size());
  for (std::size_t t = 0; t < phi.size(); ++t)
    out[t] = std::make_shared<GridSnapshotPolicy>(*phi[t], axes);
  return out;
}

}  // namespace steerkit
