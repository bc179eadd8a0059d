#pragma once

// Time-indexed transition maps f_t(x, u) evaluable at every ladder level,
// plus the registry of built-in benchmark systems.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/jet.hpp"
#include "steerkit/ladder.hpp"

namespace steerkit {

class SystemStage {
 public:
  virtual ~SystemStage() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

#define X(S) \
  virtual void eval(const Vec<S>& x, const Vec<S>& u, Vec<S>& out) const = 0;
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X
};

using StagePtr = std::shared_ptr<const SystemStage>;

// Adapts a scalar-generic callable (x, u) -> x' into a stage. The callable is
// instantiated once per ladder level.
template <class F>
class CallableStage final : public SystemStage {
 public:
  CallableStage(int n, int m, F f) : n_(n), m_(m), f_(std::move(f)) {}
  int state_dim() const override { return n_; }
  int control_dim() const override { return m_; }

#define X(S)                                                            \
  void eval(const Vec<S>& x, const Vec<S>& u, Vec<S>& out) const override { \
    out = f_(x, u);                                                     \
  }
  STEERKIT_FOR_EACH_LEVEL(X)
#undef X

 private:
  int n_, m_;
  F f_;
};

template <class F>
StagePtr make_stage(int n, int m, F f) {
  return std::make_shared<CallableStage<F>>(n, m, std::move(f));
}

struct DynamicsSchedule {
  int T = 0;
  int n = 0;
  int m = 0;
  std::vector<StagePtr> stages;  // index 0..T-1
};

using SchedulePtr = std::shared_ptr<const DynamicsSchedule>;

inline SchedulePtr make_schedule(std::vector<StagePtr> stages) {
  if (stages.empty()) throw std::invalid_argument("schedule: empty stage list");
  auto s = std::make_shared<DynamicsSchedule>();
  s->T = static_cast<int>(stages.size());
  s->n = stages[0]->state_dim();
  s->m = stages[0]->control_dim();
  for (auto& st : stages) {
    if (st->state_dim() != s->n || st->control_dim() != s->m)
      throw std::invalid_argument("schedule: inconsistent stage dimensions");
  }
  s->stages = std::move(stages);
  return s;
}

template <class S>
Vec<S> step(const DynamicsSchedule& sys, int t, const Vec<S>& x,
            const Vec<S>& u) {
  if (t < 0 || t >= sys.T) throw std::out_of_range("step: stage index");
  Vec<S> out;
  sys.stages[t]->eval(x, u, out);
  return out;
}

// ∂f_t/∂x at (x, u), exact via one seeded pass.
template <class S>
Mat<S> jac_x(const DynamicsSchedule& sys, int t, const Vec<S>& x,
             const Vec<S>& u) {
  if (t < 0 || t >= sys.T) throw std::out_of_range("jac_x: stage index");
  Vec<Dual<S>> out;
  sys.stages[t]->eval(seed_identity(x), lift_const(u), out);
  return tangents_of(out, x.size());
}

// ∂f_t/∂u at (x, u).
template <class S>
Mat<S> jac_u(const DynamicsSchedule& sys, int t, const Vec<S>& x,
             const Vec<S>& u) {
  if (t < 0 || t >= sys.T) throw std::out_of_range("jac_u: stage index");
  Vec<Dual<S>> out;
  sys.stages[t]->eval(lift_const(x), seed_identity(u), out);
  return tangents_of(out, u.size());
}

using RegistryParams = std::map<std::string, double>;

namespace detail {

inline double param_or(const RegistryParams& p, const std::string& key,
                       double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline void reject_unknown(const RegistryParams& p,
                           std::initializer_list<const char*> known,
                           const std::string& system) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* name : known)
      if (k == name) ok = true;
    if (!ok)
      throw std::invalid_argument("registry: unknown param '" + k + "' for '" +
                                  system + "'");
  }
}

}  // namespace detail

// One-step planar system: x' = x + [sin p, -sin q] + u·[1, 1+cos p], m=1.
// Accepted params: T (must be 1), m0/m1 (mean shift; configures companion
// defaults only — the transition does not depend on it).
inline SchedulePtr registry_example1(const RegistryParams& params) {
  detail::reject_unknown(params, {"T", "m0", "m1"}, "example1");
  if (detail::param_or(params, "T", 1.0) != 1.0)
    throw std::invalid_argument("registry: example1 is a one-step system (T=1)");
  auto f = [](const auto& x, const auto& u) {
    using V = std::remove_cvref_t<decltype(x)>;
    V out(2);
    out[0] = x[0] + sin(x[0]) + u[0];
    out[1] = x[1] - sin(x[1]) + u[0] * (1.0 + cos(x[0]));
    return out;
  };
  return make_schedule({make_stage(2, 1, f)});
}

// Planar map with damped second coordinate: f = [p+q+u1, beta*q + sin p + u2].
// Accepted params: beta (default 0.9), T (default 3).
inline SchedulePtr registry_example2(const RegistryParams& params) {
  detail::reject_unknown(params, {"beta", "T"}, "example2");
  double beta = detail::param_or(params, "beta", 0.9);
  int T = static_cast<int>(detail::param_or(params, "T", 3.0));
  if (T < 1) throw std::invalid_argument("registry: example2 requires T >= 1");
  auto f = [beta](const auto& x, const auto& u) {
    using V = std::remove_cvref_t<decltype(x)>;
    V out(2);
    out[0] = x[0] + x[1] + u[0];
    out[1] = beta * x[1] + sin(x[0]) + u[1];
    return out;
  };
  std::vector<StagePtr> stages(T, make_stage(2, 2, f));
  return make_schedule(std::move(stages));
}

// Integrator test system: f(x, u) = u. Params: dim (default 2), T (default 1).
inline SchedulePtr registry_integrator(const RegistryParams& params) {
  detail::reject_unknown(params, {"dim", "T"}, "integrator");
  int dim = static_cast<int>(detail::param_or(params, "dim", 2.0));
  int T = static_cast<int>(detail::param_or(params, "T", 1.0));
  if (dim < 1 || T < 1)
    throw std::invalid_argument("registry: integrator requires dim,T >= 1");
  auto f = [dim](const auto& x, const auto& u) {
    (void)x;
    using V = std::remove_cvref_t<decltype(u)>;
    V out(dim);
    for (int i = 0; i < dim; ++i) out[i] = u[i];
    return out;
  };
  std::vector<StagePtr> stages(T, make_stage(dim, dim, f));
  return make_schedule(std::move(stages));
}

inline SchedulePtr registry_get(const std::string& name,
                                const RegistryParams& params = {}) {
  if (name == "example1") return registry_example1(params);
  if (name == "example2") return registry_example2(params);
  if (name == "integrator") return registry_integrator(params);
  throw std::invalid_argument("registry: unknown system '" + name + "'");
}

}  // namespace steerkit
