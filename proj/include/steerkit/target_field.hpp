#pragma once

// Conditional target fields τ_t(x) ≈ E[𝔱(x₀) | x_t = x].  Three estimators:
//
//  * ConstantField  — 𝔱 is constant, so τ_t(x) = c exactly at every time.
//  * PathwiseField  — τ_0 = 𝔱 exactly (conditioning on x₀ itself); later
//    times have no pointwise value and must consume stored per-sample
//    targets instead (see `shared_base`).
//  * KnnField       — nonparametric estimate from a fitted particle cloud:
//    average of the stored targets over the k nearest stage-t particles.
//    Piecewise constant, hence zero derivative almost everywhere; the
//    tangent is deliberately zeroed.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerkit/ladder.hpp"
#include "steerkit/linalg.hpp"
#include "steerkit/target_map.hpp"

namespace steerkit {

class TargetField {
 public:
  virtual ~TargetField() = default;

  // τ_t(x).  Throws if the estimator has no pointwise value at stage t.
#define X(S) virtual void tau(int t, const Vec<S>& x, Vec<S>& out) const = 0;
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X

  // True when τ_t(x) is a well-defined function of x alone at every stage
  // (pointwise descent-step policies need this unless the horizon is 1).
  virtual bool pointwise_everywhere() const { return true; }
  // True when the estimate genuinely depends on the stage index, so costate
  // bases differ across t and telescoped accumulation does not apply.
  virtual bool time_varying() const { return false; }
  // True when the estimator substitutes each sample's own target (exact for
  // injective flows); costates then read the stored per-sample targets.
  virtual bool per_sample() const { return false; }
  virtual const char* name() const = 0;
};

using TargetFieldPtr = std::shared_ptr<const TargetField>;

template <class S>
Vec<S> field_tau(const TargetField& field, int t, const Vec<S>& x) {
  Vec<S> out;
  field.tau(t, x, out);
  return out;
}

// --- constant ----------------------------------------------------------

class ConstantField final : public TargetField {
 public:
  explicit ConstantField(Vec<double> c) : c_(std::move(c)) {}

#define X(S)                                                    \
  void tau(int, const Vec<S>& x, Vec<S>& out) const override {  \
    if (x.size() != c_.size())                                  \
      throw std::invalid_argument("target field: dim mismatch"); \
    out = Vec<S>(c_.size());                                    \
    for (int i = 0; i < c_.size(); ++i) out[i] = S(c_[i]);      \
  }
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X

  const char* name() const override { return "constant"; }
  const Vec<double>& value() const { return c_; }

 private:
  Vec<double> c_;
};

// --- pathwise ----------------------------------------------------------

class PathwiseField final : public TargetField {
 public:
  PathwiseField(TargetMap map, int horizon)
      : map_(std::move(map)), horizon_(horizon) {
    if (horizon < 1)
      throw std::invalid_argument("target field: horizon must be >= 1");
  }

#define X(S)                                                          \
  void tau(int t, const Vec<S>& x, Vec<S>& out) const override {      \
    if (t != 0)                                                       \
      throw std::logic_error(                                         \
          "pathwise target field has no pointwise value at stage " +  \
          std::to_string(t) + "; it conditions exactly only at 0");   \
    out = map_.eval(x);                                               \
  }
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X

  bool pointwise_everywhere() const override { return horizon_ == 1; }
  bool per_sample() const override { return true; }
  const char* name() const override { return "pathwise"; }
  const TargetMap& map() const { return map_; }
  int horizon() const { return horizon_; }

 private:
  TargetMap map_;
  int horizon_;
};

// --- k-nearest-neighbour -----------------------------------------------

class KnnField final : public TargetField {
 public:
  // points[t] is the stage-t particle cloud (flat, n doubles per particle);
  // targets holds the matching per-particle target values (flat, n each).
  KnnField(int k, int n, std::vector<std::vector<double>> points,
           std::vector<double> targets)
      : k_(k), n_(n), points_(std::move(points)), targets_(std::move(targets)) {
    if (k_ < 1) throw std::invalid_argument("knn field: k must be >= 1");
    if (n_ < 1) throw std::invalid_argument("knn field: n must be >= 1");
    count_ = static_cast<int>(targets_.size()) / n_;
    if (count_ * n_ != static_cast<int>(targets_.size()))
      throw std::invalid_argument("knn field: ragged target array");
    if (k_ > count_)
      throw std::invalid_argument("knn field: k exceeds cloud size");
    for (const auto& cloud : points_)
      if (static_cast<int>(cloud.size()) != count_ * n_)
        throw std::invalid_argument("knn field: ragged particle cloud");
  }

#define X(S)                                                        \
  void tau(int t, const Vec<S>& x, Vec<S>& out) const override {    \
    Vec<double> q(n_);                                              \
    for (int i = 0; i < n_; ++i) q[i] = core(x[i]);                 \
    Vec<double> avg = estimate(t, q);                               \
    out = Vec<S>(n_);                                               \
    for (int i = 0; i < n_; ++i) out[i] = S(avg[i]);                \
  }
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X

  bool time_varying() const override { return true; }
  const char* name() const override { return "knn"; }
  int k() const { return k_; }

  Vec<double> estimate(int t, const Vec<double>& q) const {
    if (t < 0 || t >= static_cast<int>(points_.size()))
      throw std::out_of_range("knn field: stage out of range");
    if (q.size() != n_)
      throw std::invalid_argument("knn field: query dim mismatch");
    const std::vector<double>& cloud = points_[t];
    // Brute-force scan keeping the k best (k is small).
    std::vector<std::pair<double, int>> best;  // (dist², index)
    best.reserve(k_ + 1);
    for (int i = 0; i < count_; ++i) {
      double d2 = 0.0;
      for (int j = 0; j < n_; ++j) {
        double d = cloud[static_cast<std::size_t>(i) * n_ + j] - q[j];
        d2 += d * d;
      }
      if (static_cast<int>(best.size()) < k_ || d2 < best.back().first) {
        auto pos = std::upper_bound(
            best.begin(), best.end(), std::make_pair(d2, i),
            [](const auto& a, const auto& b) {
              return a.first != b.first ? a.first < b.first
                                        : a.second < b.second;
            });
        best.insert(pos, {d2, i});
        if (static_cast<int>(best.size()) > k_) best.pop_back();
      }
    }
    Vec<double> avg(n_);
    for (const auto& [d2, idx] : best) {
      (void)d2;
      for (int j = 0; j < n_; ++j)
        avg[j] += targets_[static_cast<std::size_t>(idx) * n_ + j];
    }
    for (int j = 0; j < n_; ++j) avg[j] /= static_cast<double>(k_);
    return avg;
  }

 private:
  int k_ = 0;
  int n_ = 0;
  int count_ = 0;
  std::vector<std::vector<double>> points_;
  std::vector<double> targets_;
};

}  // namespace steerkit
