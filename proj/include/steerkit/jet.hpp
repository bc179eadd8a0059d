#pragma once

// Jet: a point value paired with directional-derivative columns. Thin facade
// over Vec<Dual<S>>; all chain rules live in the Dual arithmetic so nested
// jets and plain jets share one derivative implementation.

#include <stdexcept>

#include "steerkit/ladder.hpp"
#include "steerkit/linalg.hpp"

namespace steerkit {

// Seeds a vector with tangent directions; column j of `directions` becomes
// seed direction j.
template <class S>
Vec<Dual<S>> seed(const Vec<S>& x, const Mat<S>& directions) {
  if (directions.rows() != x.size())
    throw std::invalid_argument("seed: directions must have one row per component");
  int k = directions.cols();
  Vec<Dual<S>> out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Dual<S> c(x[i]);
    c.set_width(k);
    for (int j = 0; j < k; ++j) c.tangent(j) = directions(i, j);
    out[i] = std::move(c);
  }
  return out;
}

template <class S>
Vec<Dual<S>> seed_identity(const Vec<S>& x) {
  return seed(x, Mat<S>::identity(x.size()));
}

// Constant lift: width-0 tangents, so downstream derivatives ignore it.
template <class S>
Vec<Dual<S>> lift_const(const Vec<S>& x) {
  Vec<Dual<S>> out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = Dual<S>(x[i]);
  return out;
}

template <class S>
Vec<S> values_of(const Vec<Dual<S>>& x) {
  Vec<S> v(x.size());
  for (int i = 0; i < x.size(); ++i) v[i] = x[i].value();
  return v;
}

// Tangent matrix (rows = components, cols = seed directions). `width` names
// the seeding width so width-0 (constant) results still shape correctly.
template <class S>
Mat<S> tangents_of(const Vec<Dual<S>>& x, int width) {
  Mat<S> t(x.size(), width);
  for (int i = 0; i < x.size(); ++i) {
    if (x[i].width() == 0) continue;  // constant component: zero row
    if (x[i].width() != width)
      throw std::logic_error("tangents_of: inconsistent tangent width");
    for (int j = 0; j < width; ++j) t(i, j) = x[i].tangent(j);
  }
  return t;
}

// Exact forward-mode Jacobian of a map evaluable on the next ladder level.
template <class S, class F>
Mat<S> jacobian(F&& f, const Vec<S>& x) {
  Vec<Dual<S>> out = f(seed_identity(x));
  return tangents_of(out, x.size());
}

// Public fixed-level jet per the module contract: value + d×k tangent.
struct Jet {
  Vec<d1> comps;

  Jet() = default;
  explicit Jet(Vec<d1> c) : comps(std::move(c)) {}
  Jet(const Vec<double>& x, const Mat<double>& directions)
      : comps(seed(x, directions)) {}

  int size() const { return comps.size(); }
  int width() const {
    for (int i = 0; i < comps.size(); ++i)
      if (comps[i].width() > 0) return comps[i].width();
    return 0;
  }
  Vec<double> value() const { return values_of(comps); }
  Mat<double> tangent() const { return tangents_of(comps, width()); }
};

inline Jet operator+(const Jet& a, const Jet& b) {
  return Jet(a.comps + b.comps);
}
inline Jet operator-(const Jet& a, const Jet& b) {
  return Jet(a.comps - b.comps);
}
inline Jet operator*(double c, const Jet& a) { return Jet(c * a.comps); }

// Componentwise (Hadamard) product.
inline Jet cmul(const Jet& a, const Jet& b) {
  if (a.size() != b.size()) throw std::logic_error("cmul: size mismatch");
  Vec<d1> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.comps[i] * b.comps[i];
  return Jet(out);
}

inline Jet apply(const Mat<double>& m, const Jet& a) {
  Mat<d1> lifted(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) lifted(i, j) = d1(m(i, j));
  return Jet(matvec(lifted, a.comps));
}

inline Jet sin(const Jet& a) {
  Vec<d1> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = sin(a.comps[i]);
  return Jet(out);
}
inline Jet cos(const Jet& a) {
  Vec<d1> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = cos(a.comps[i]);
  return Jet(out);
}
inline Jet exp(const Jet& a) {
  Vec<d1> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = exp(a.comps[i]);
  return Jet(out);
}

}  // namespace steerkit
