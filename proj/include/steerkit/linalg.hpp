#pragma once

// Small dense vectors/matrices generic over the scalar carrier. Dimensions in
// this project are 1..4; storage is inline at those sizes.

#include <initializer_list>
#include <stdexcept>

#include "steerkit/dual.hpp"

namespace steerkit {

template <class S>
class Vec {
 public:
  Vec() = default;
  explicit Vec(int n) { d_.resize(n); }
  Vec(std::initializer_list<double> init) {
    d_.resize(static_cast<int>(init.size()));
    int i = 0;
    for (double v : init) d_[i++] = S(v);
  }

  int size() const { return d_.size(); }
  S& operator[](int i) { return d_[i]; }
  const S& operator[](int i) const { return d_[i]; }
  void resize(int n) { d_.resize(n); }

  Vec& operator+=(const Vec& o) {
    check(o);
    for (int i = 0; i < size(); ++i) d_[i] += o[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    check(o);
    for (int i = 0; i < size(); ++i) d_[i] -= o[i];
    return *this;
  }
  Vec& operator*=(double c) {
    for (int i = 0; i < size(); ++i) d_[i] *= c;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double c) { return a *= c; }
  friend Vec operator*(double c, Vec a) { return a *= c; }

 private:
  SmallVec<S, 4> d_;
  void check(const Vec& o) const {
    if (o.size() != size()) throw std::logic_error("Vec: size mismatch");
  }
};

template <class S>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : r_(rows), c_(cols) { d_.resize(rows * cols); }

  int rows() const { return r_; }
  int cols() const { return c_; }
  S& operator()(int i, int j) { return d_[i * c_ + j]; }
  const S& operator()(int i, int j) const { return d_[i * c_ + j]; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = S(1.0);
    return m;
  }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < r_ * c_; ++i) d_[i] += o.d_[i];
    return *this;
  }
  Mat& operator*=(double s) {
    for (int i = 0; i < r_ * c_; ++i) d_[i] *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

 private:
  int r_ = 0, c_ = 0;
  SmallVec<S, 16> d_;
};

template <class S>
S dot(const Vec<S>& a, const Vec<S>& b) {
  if (a.size() != b.size()) throw std::logic_error("dot: size mismatch");
  S acc(0.0);
  for (int i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class S>
S norm2(const Vec<S>& a) {
  return dot(a, a);
}

// y = M x
template <class S>
Vec<S> matvec(const Mat<S>& m, const Vec<S>& x) {
  if (m.cols() != x.size()) throw std::logic_error("matvec: size mismatch");
  Vec<S> y(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    S acc(0.0);
    for (int j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

// y = Mᵀ x
template <class S>
Vec<S> matTvec(const Mat<S>& m, const Vec<S>& x) {
  if (m.rows() != x.size()) throw std::logic_error("matTvec: size mismatch");
  Vec<S> y(m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    S acc(0.0);
    for (int i = 0; i < m.rows(); ++i) acc += m(i, j) * x[i];
    y[j] = acc;
  }
  return y;
}

template <class S>
Mat<S> matmul(const Mat<S>& a, const Mat<S>& b) {
  if (a.cols() != b.rows()) throw std::logic_error("matmul: size mismatch");
  Mat<S> r(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const S& aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

template <class S>
Mat<S> transpose(const Mat<S>& a) {
  Mat<S> r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
  return r;
}

template <class S>
bool all_finite(const Vec<S>& v) {
  for (int i = 0; i < v.size(); ++i)
    if (!all_finite(v[i])) return false;
  return true;
}

// Lower-triangular Cholesky factor of an SPD matrix. Throws on non-SPD input.
inline Mat<double> cholesky(const Mat<double>& a) {
  int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("cholesky: square required");
  Mat<double> l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = a(i, j);
      for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      if (i == j) {
        if (acc <= 0.0)
          throw std::invalid_argument("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(acc);
      } else {
        l(i, j) = acc / l(j, j);
      }
    }
  }
  return l;
}

}  // namespace steerkit
