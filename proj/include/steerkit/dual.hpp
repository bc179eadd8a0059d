#pragma once

// Forward-mode scalar carrier. A Dual<S> holds a value and a runtime-width
// row of tangents (derivatives along seed directions). Nesting Dual<Dual<...>>
// gives higher differentiation levels; every downstream component is generic
// over the scalar type so whole rollouts can run on nested carriers.
//
// Width convention: width 0 means "constant with respect to all seeds" and
// combines with any other width. Mixing two nonzero, unequal widths is a
// logic error and throws.

#include <cmath>
#include <cstring>
#include <new>
#include <stdexcept>
#include <type_traits>
#include <utility>

namespace steerkit {

// Inline-storage vector for tangent rows. Capacity covers every registered
// system (state/control dims <= 4); wider seeds spill to the heap.
template <class T, int Cap>
class SmallVec {
 public:
  SmallVec() = default;
  SmallVec(const SmallVec& o) { assign_from(o); }
  SmallVec(SmallVec&& o) noexcept { move_from(std::move(o)); }
  SmallVec& operator=(const SmallVec& o) {
    if (this != &o) {
      clear();
      assign_from(o);
    }
    return *this;
  }
  SmallVec& operator=(SmallVec&& o) noexcept {
    if (this != &o) {
      clear();
      move_from(std::move(o));
    }
    return *this;
  }
  ~SmallVec() { clear(); }

  int size() const { return size_; }
  bool empty() const { return size_ == 0; }
  T* data() { return heap_ ? heap_ : inline_ptr(); }
  const T* data() const { return heap_ ? heap_ : inline_ptr(); }
  T& operator[](int i) { return data()[i]; }
  const T& operator[](int i) const { return data()[i]; }

  // Value-initializes new elements (zero for arithmetic types).
  void resize(int n) {
    if (n == size_) return;
    if (n < size_) {
      T* p = data();
      for (int i = n; i < size_; ++i) p[i].~T();
      size_ = n;
      return;
    }
    reserve(n);
    T* p = data();
    for (int i = size_; i < n; ++i) new (p + i) T();
    size_ = n;
  }

  void clear() {
    T* p = data();
    for (int i = 0; i < size_; ++i) p[i].~T();
    size_ = 0;
    if (heap_) {
      ::operator delete(heap_);
      heap_ = nullptr;
      cap_ = Cap;
    }
  }

 private:
  alignas(T) unsigned char buf_[Cap * sizeof(T)];
  T* heap_ = nullptr;
  int size_ = 0;
  int cap_ = Cap;

  T* inline_ptr() { return std::launder(reinterpret_cast<T*>(buf_)); }
  const T* inline_ptr() const {
    return std::launder(reinterpret_cast<const T*>(buf_));
  }

  void reserve(int n) {
    if (n <= cap_) return;
    int newcap = cap_ * 2 > n ? cap_ * 2 : n;
    T* fresh = static_cast<T*>(::operator new(sizeof(T) * newcap));
    T* p = data();
    for (int i = 0; i < size_; ++i) {
      new (fresh + i) T(std::move(p[i]));
      p[i].~T();
    }
    if (heap_) ::operator delete(heap_);
    heap_ = fresh;
    cap_ = newcap;
  }

  void assign_from(const SmallVec& o) {
    reserve(o.size_);
    T* p = data();
    for (int i = 0; i < o.size_; ++i) new (p + i) T(o.data()[i]);
    size_ = o.size_;
  }

  void move_from(SmallVec&& o) {
    if (o.heap_) {
      heap_ = o.heap_;
      cap_ = o.cap_;
      size_ = o.size_;
      o.heap_ = nullptr;
      o.size_ = 0;
      o.cap_ = Cap;
    } else {
      T* p = inline_ptr();
      for (int i = 0; i < o.size_; ++i) {
        new (p + i) T(std::move(o.data()[i]));
        o.data()[i].~T();
      }
      size_ = o.size_;
      o.size_ = 0;
    }
  }
};

inline constexpr int kTangentInlineCap = 4;

template <class S>
class Dual {
 public:
  using Inner = S;

  Dual() : val_(0.0) {}
  Dual(double v) : val_(v) {}  // NOLINT: implicit lift of constants
  Dual(S v)
    requires(!std::is_same_v<S, double>)
      : val_(std::move(v)) {}
  Dual(S v, SmallVec<S, kTangentInlineCap> tan)
      : val_(std::move(v)), tan_(std::move(tan)) {}

  const S& value() const { return val_; }
  S& value() { return val_; }
  int width() const { return tan_.size(); }
  const S& tangent(int i) const { return tan_[i]; }
  S& tangent(int i) { return tan_[i]; }

  // Reseeds this scalar with `w` zero tangent slots.
  void set_width(int w) { tan_.resize(w); }

  Dual operator-() const {
    Dual r;
    r.val_ = -val_;
    r.tan_.resize(tan_.size());
    for (int i = 0; i < tan_.size(); ++i) r.tan_[i] = -tan_[i];
    return r;
  }

  Dual& operator+=(const Dual& o) {
    val_ += o.val_;
    binary_tangents(o, [](S& t, const S& ot) { t += ot; });
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    val_ -= o.val_;
    binary_tangents(o, [](S& t, const S& ot) { t -= ot; });
    return *this;
  }
  Dual& operator+=(double d) {
    val_ += d;
    return *this;
  }
  Dual& operator-=(double d) {
    val_ -= d;
    return *this;
  }
  Dual& operator*=(double d) {
    val_ *= d;
    for (int i = 0; i < tan_.size(); ++i) tan_[i] *= d;
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator+(Dual a, double b) { return a += b; }
  friend Dual operator+(double a, Dual b) { return b += a; }
  friend Dual operator-(Dual a, double b) { return a -= b; }
  friend Dual operator-(double a, const Dual& b) { return (-b) += a; }
  friend Dual operator*(Dual a, double b) { return a *= b; }
  friend Dual operator*(double a, Dual b) { return b *= a; }
  friend Dual operator/(Dual a, double b) { return a *= (1.0 / b); }

  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.val_ = a.val_ * b.val_;
    int w = combined_width(a, b);
    r.tan_.resize(w);
    for (int i = 0; i < w; ++i) {
      if (!a.tan_.empty()) r.tan_[i] = a.tan_[i] * b.val_;
      if (!b.tan_.empty()) {
        if (!a.tan_.empty())
          r.tan_[i] += a.val_ * b.tan_[i];
        else
          r.tan_[i] = a.val_ * b.tan_[i];
      }
    }
    return r;
  }

  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    S inv = S(1.0) / b.val_;
    r.val_ = a.val_ * inv;
    int w = combined_width(a, b);
    r.tan_.resize(w);
    for (int i = 0; i < w; ++i) {
      // (a/b)' = (a' - (a/b) b') / b
      S num = !a.tan_.empty() ? a.tan_[i] : S(0.0);
      if (!b.tan_.empty()) num -= r.val_ * b.tan_[i];
      r.tan_[i] = num * inv;
    }
    return r;
  }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

  template <class F, class DF>
  friend Dual lift_unary(const Dual& a, F f, DF df) {
    Dual r;
    r.val_ = f(a.val_);
    r.tan_.resize(a.tan_.size());
    if (!a.tan_.empty()) {
      S d = df(a.val_);
      for (int i = 0; i < a.tan_.size(); ++i) r.tan_[i] = d * a.tan_[i];
    }
    return r;
  }

 private:
  S val_;
  SmallVec<S, kTangentInlineCap> tan_;

  static int combined_width(const Dual& a, const Dual& b) {
    int wa = a.tan_.size(), wb = b.tan_.size();
    if (wa == 0) return wb;
    if (wb == 0) return wa;
    if (wa != wb) throw std::logic_error("Dual: mismatched tangent widths");
    return wa;
  }

  template <class Op>
  void binary_tangents(const Dual& o, Op op) {
    int w = combined_width(*this, o);
    if (w == 0) return;
    if (tan_.empty()) {
      tan_.resize(w);
    }
    if (!o.tan_.empty()) {
      for (int i = 0; i < w; ++i) op(tan_[i], o.tan_[i]);
    }
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class S>
struct is_dual<Dual<S>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

// Innermost (plain double) value of an arbitrarily nested carrier.
inline double core(double x) { return x; }
template <class S>
double core(const Dual<S>& d) {
  return core(d.value());
}

inline bool all_finite(double x) { return std::isfinite(x); }
template <class S>
bool all_finite(const Dual<S>& d) {
  if (!all_finite(d.value())) return false;
  for (int i = 0; i < d.width(); ++i)
    if (!all_finite(d.tangent(i))) return false;
  return true;
}

// Math overloads resolving for double and Dual alike inside generic code.
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }

template <class S>
Dual<S> sin(const Dual<S>& a) {
  return lift_unary(
      a, [](const S& v) { return sin(v); }, [](const S& v) { return cos(v); });
}
template <class S>
Dual<S> cos(const Dual<S>& a) {
  return lift_unary(
      a, [](const S& v) { return cos(v); },
      [](const S& v) { return -sin(v); });
}
template <class S>
Dual<S> exp(const Dual<S>& a) {
  return lift_unary(
      a, [](const S& v) { return exp(v); }, [](const S& v) { return exp(v); });
}
template <class S>
Dual<S> sqrt(const Dual<S>& a) {
  Dual<S> r = lift_unary(
      a, [](const S& v) { return sqrt(v); },
      [](const S& v) { return S(0.5) / sqrt(v); });
  return r;
}
template <class S>
Dual<S> abs(const Dual<S>& a) {
  // Subgradient selection at 0: derivative +1 (matches one-sided convention).
  double s = core(a) < 0.0 ? -1.0 : 1.0;
  return a * s;
}

template <class S>
bool operator<(const Dual<S>& a, const Dual<S>& b) {
  return core(a) < core(b);
}
template <class S>
bool operator<(const Dual<S>& a, double b) {
  return core(a) < b;
}
template <class S>
bool operator<(double a, const Dual<S>& b) {
  return a < core(b);
}
template <class S, class B>
bool operator>(const Dual<S>& a, const B& b) {
  return b < a;
}
template <class S>
bool operator>(double a, const Dual<S>& b) {
  return b < a;
}

inline double min(double a, double b) { return a < b ? a : b; }
inline double max(double a, double b) { return a < b ? b : a; }
template <class A, class B>
auto min(const A& a, const B& b) -> std::common_type_t<A, B>
  requires(is_dual_v<A> || is_dual_v<B>)
{
  using R = std::common_type_t<A, B>;
  return core(R(a)) < core(R(b)) ? R(a) : R(b);
}
template <class A, class B>
auto max(const A& a, const B& b) -> std::common_type_t<A, B>
  requires(is_dual_v<A> || is_dual_v<B>)
{
  using R = std::common_type_t<A, B>;
  return core(R(a)) < core(R(b)) ? R(b) : R(a);
}

}  // namespace steerkit
