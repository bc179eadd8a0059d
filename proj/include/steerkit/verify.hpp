#pragma once

// Independent oracles used by the verification suites.  Everything here is
// implemented literally from closed-form expressions — the drift, gain, and
// iterate formulas are written out again with plain std::sin/std::cos and no
// shared code with the main pipeline — so agreement between the two paths is
// evidence rather than tautology.

#include <cmath>
#include <functional>
#include <stdexcept>

#include "steerkit/linalg.hpp"

namespace steerkit {

// Benchmark 1: the planar single-step system
//   x⁺ = x + f(x) + u·G(x),  f(p,q) = (sin p, −sin q),  G(p,q) = (1, 1+cos p),
// steered toward x − m.  The scalar policy iteration has a closed form.
struct Example1Params {
  double m0 = 4.0, m1 = 4.0;  // mean shift m
  double alpha = 0.15;        // step size
  int i = 0;                  // iterate index
  // φ⁰; the benchmark uses the first coordinate.
  std::function<double(double, double)> phi0 = [](double p, double) {
    return p;
  };
};

namespace oracle_detail {

inline void example1_terms(double p, double q, double m0, double m1,
                           double& g_dot_fm, double& g2) {
  const double f0 = std::sin(p);
  const double f1 = -std::sin(q);
  const double G0 = 1.0;
  const double G1 = 1.0 + std::cos(p);
  g_dot_fm = G0 * (f0 + m0) + G1 * (f1 + m1);
  g2 = G0 * G0 + G1 * G1;
}

}  // namespace oracle_detail

// φⁱ(x) = (1−α|G|²)ⁱ φ⁰(x) − [Gᵀ(f+m)/|G|²]·(1−(1−α|G|²)ⁱ), evaluated
// literally.
inline double example1_closed_form(const Example1Params& prm,
                                   const Vec<double>& x) {
  if (prm.i < 0) throw std::invalid_argument("closed form: i must be >= 0");
  const double p = x[0], q = x[1];
  double g_dot_fm = 0.0, g2 = 0.0;
  oracle_detail::example1_terms(p, q, prm.m0, prm.m1, g_dot_fm, g2);
  const double r = 1.0 - prm.alpha * g2;
  const double ri = std::pow(r, prm.i);
  return ri * prm.phi0(p, q) - (g_dot_fm / g2) * (1.0 - ri);
}

// Pointwise limit φ̂(x) = −G(x)ᵀ(f(x)+m)/|G(x)|².
inline double example1_limit(const Vec<double>& x, double m0, double m1) {
  double g_dot_fm = 0.0, g2 = 0.0;
  oracle_detail::example1_terms(x[0], x[1], m0, m1, g_dot_fm, g2);
  return -g_dot_fm / g2;
}

// Per-iteration error factor 1 − α|G(x)|² (signed; |·| < 1 is the
// contraction condition, guaranteed for 0 < α < 2/5 since |G|² ∈ [1, 5]).
inline double contraction_factor(const Vec<double>& x, double alpha) {
  double g_dot_fm = 0.0, g2 = 0.0;
  oracle_detail::example1_terms(x[0], x[1], 0.0, 0.0, g_dot_fm, g2);
  return 1.0 - alpha * g2;
}

// Central-difference jacobian oracle.
inline Mat<double> fd_jacobian(
    const std::function<Vec<double>(const Vec<double>&)>& f,
    const Vec<double>& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_jacobian: h must be > 0");
  const Vec<double> f0 = f(x);
  Mat<double> J(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Vec<double> hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    const Vec<double> fhi = f(hi);
    const Vec<double> flo = f(lo);
    for (int i = 0; i < f0.size(); ++i)
      J(i, j) = (fhi[i] - flo[i]) / (2.0 * h);
  }
  return J;
}

}  // namespace steerkit
