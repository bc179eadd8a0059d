#pragma once

// The closed scalar ladder. Every type-erased interface (dynamics stages,
// policy nodes, target fields) exposes one virtual per level, which is what
// lets policy updates nest: evaluating a gradient-step node at level k runs
// tail rollouts at level k+1. Six dual layers cover five direct update
// nestings plus one outer Jacobian; deeper chains must snapshot.

#include "steerkit/dual.hpp"

namespace steerkit {

using d0 = double;
using d1 = Dual<d0>;
using d2 = Dual<d1>;
using d3 = Dual<d2>;
using d4 = Dual<d3>;
using d5 = Dual<d4>;
using d6 = Dual<d5>;

inline constexpr int kMaxLadder = 6;

template <class S>
struct ladder_index;
template <>
struct ladder_index<d0> {
  static constexpr int value = 0;
};
template <class S>
struct ladder_index<Dual<S>> {
  static constexpr int value = ladder_index<S>::value + 1;
};
template <class S>
inline constexpr int ladder_index_v = ladder_index<S>::value;

// Expands X(S) for every ladder level; used to declare and override the
// per-level virtuals without hand-writing seven copies.
#define STEERKIT_FOR_EACH_LEVEL(X) \
  X(::steerkit::d0)                \
  X(::steerkit::d1)                \
  X(::steerkit::d2)                \
  X(::steerkit::d3)                \
  X(::steerkit::d4)                \
  X(::steerkit::d5)                \
  X(::steerkit::d6)

}  // namespace steerkit
