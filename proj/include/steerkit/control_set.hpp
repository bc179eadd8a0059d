#pragma once

// Convex control sets and the pointwise Euclidean projection. The projection
// is evaluable on any ladder level; branch decisions use core values, which
// realizes the one-sided derivative convention at clamped points (active box
// coordinates get zero rows, ball projections differentiate radially).

#include <stdexcept>

#include "steerkit/ladder.hpp"
#include "steerkit/linalg.hpp"

namespace steerkit {

struct ControlSet {
  enum class Kind { FullSpace, Box, Ball } kind = Kind::FullSpace;
  Vec<double> lo, hi;      // Box
  Vec<double> center;      // Ball
  double radius = 0.0;     // Ball

  static ControlSet full_space() { return {}; }

  static ControlSet box(Vec<double> lo, Vec<double> hi) {
    if (lo.size() != hi.size())
      throw std::invalid_argument("box: lo/hi size mismatch");
    for (int i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i]))
        throw std::invalid_argument("box: requires lo <= hi componentwise");
    ControlSet s;
    s.kind = Kind::Box;
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
  }

  static ControlSet ball(Vec<double> center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be > 0");
    ControlSet s;
    s.kind = Kind::Ball;
    s.center = std::move(center);
    s.radius = radius;
    return s;
  }

  // Control dimension the set constrains; -1 for the unconstrained case
  // (compatible with any dimension).
  int dim() const {
    switch (kind) {
      case Kind::FullSpace: return -1;
      case Kind::Box: return lo.size();
      case Kind::Ball: return center.size();
    }
    return -1;
  }
};

template <class S>
Vec<S> project_point(const ControlSet& set, const Vec<S>& u) {
  switch (set.kind) {
    case ControlSet::Kind::FullSpace:
      return u;
    case ControlSet::Kind::Box: {
      Vec<S> out(u.size());
      for (int i = 0; i < u.size(); ++i) {
        double c = core(u[i]);
        if (c < set.lo[i])
          out[i] = S(set.lo[i]);
        else if (c > set.hi[i])
          out[i] = S(set.hi[i]);
        else
          out[i] = u[i];
      }
      return out;
    }
    case ControlSet::Kind::Ball: {
      Vec<S> d(u.size());
      double r2 = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        d[i] = u[i] - set.center[i];
        double di = core(d[i]);
        r2 += di * di;
      }
      if (r2 <= set.radius * set.radius) return u;
      S dist(0.0);
      for (int i = 0; i < u.size(); ++i) dist += d[i] * d[i];
      S scale = set.radius / sqrt(dist);
      Vec<S> out(u.size());
      for (int i = 0; i < u.size(); ++i) out[i] = set.center[i] + d[i] * scale;
      return out;
    }
  }
  throw std::logic_error("project_point: unreachable");
}

// Distance from v to the normal cone N_U(u). Stationarity holds when
// -∂f/∂uᵀ p lands inside the cone; this measures the violation.
inline double dist_to_normal_cone(const ControlSet& set, const Vec<double>& u,
                                  const Vec<double>& v) {
  constexpr double kActiveTol = 1e-10;
  switch (set.kind) {
    case ControlSet::Kind::FullSpace: {
      return std::sqrt(norm2(v));
    }
    case ControlSet::Kind::Box: {
      double acc = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        bool at_hi = u[i] >= set.hi[i] - kActiveTol;
        bool at_lo = u[i] <= set.lo[i] + kActiveTol;
        double d;
        if (at_hi && at_lo) {
          d = 0.0;  // degenerate interval: cone is the whole line
        } else if (at_hi) {
          d = max(-v[i], 0.0);  // cone allows v_i >= 0
        } else if (at_lo) {
          d = max(v[i], 0.0);  // cone allows v_i <= 0
        } else {
          d = v[i];
        }
        acc += d * d;
      }
      return std::sqrt(acc);
    }
    case ControlSet::Kind::Ball: {
      Vec<double> d = u - set.center;
      double r = std::sqrt(norm2(d));
      if (r < set.radius - kActiveTol || r == 0.0) {
        return std::sqrt(norm2(v));  // interior: cone is {0}
      }
      // Boundary: cone is the outward ray. Split v into radial/tangential.
      Vec<double> nrm = d * (1.0 / r);
      double rho = dot(v, nrm);
      double tang2 = norm2(v) - rho * rho;
      if (tang2 < 0.0) tang2 = 0.0;
      double wrong = min(rho, 0.0);
      return std::sqrt(tang2 + wrong * wrong);
    }
  }
  throw std::logic_error("dist_to_normal_cone: unreachable");
}

}  // namespace steerkit
