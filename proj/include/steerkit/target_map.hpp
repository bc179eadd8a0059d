#pragma once

// The steering target 𝔱: per-sample map of the initial state. Closed variant
// set plus an extensible named registry (ships empty; library users can
// register ladder-evaluable maps).

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "steerkit/ladder.hpp"
#include "steerkit/linalg.hpp"

namespace steerkit {

class TargetMapIface {
 public:
  virtual ~TargetMapIface() = default;
#define X(S) virtual void eval(const Vec<S>& x, Vec<S>& out) const = 0;
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X
};

inline std::map<std::string, std::shared_ptr<const TargetMapIface>>&
target_map_registry() {
  static std::map<std::string, std::shared_ptr<const TargetMapIface>> reg;
  return reg;
}

struct TargetMap {
  enum class Kind { Zero, Shift, Identity, Named } kind = Kind::Zero;
  Vec<double> c;  // Shift: x ↦ x - c
  std::shared_ptr<const TargetMapIface> named;

  static TargetMap zero() { return {}; }
  static TargetMap identity() {
    TargetMap t;
    t.kind = Kind::Identity;
    return t;
  }
  static TargetMap shift(Vec<double> c) {
    TargetMap t;
    t.kind = Kind::Shift;
    t.c = std::move(c);
    return t;
  }
  static TargetMap named_map(const std::string& name) {
    auto& reg = target_map_registry();
    auto it = reg.find(name);
    if (it == reg.end())
      throw std::invalid_argument("target: unknown named map '" + name + "'");
    TargetMap t;
    t.kind = Kind::Named;
    t.named = it->second;
    return t;
  }

  template <class S>
  Vec<S> eval(const Vec<S>& x) const {
    switch (kind) {
      case Kind::Zero:
        return Vec<S>(x.size());
      case Kind::Identity:
        return x;
      case Kind::Shift: {
        Vec<S> out(x.size());
        for (int i = 0; i < x.size(); ++i) out[i] = x[i] - c[i];
        return out;
      }
      case Kind::Named: {
        Vec<S> out;
        named->eval(x, out);
        return out;
      }
    }
    throw std::logic_error("target: unreachable");
  }
};

}  // namespace steerkit
