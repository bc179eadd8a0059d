#pragma once

// The projected synthetic-gradient descent loop: K sweeps of
// φ ← Π_U(φ − α ∇J(φ)), with per-iteration objective and residual reporting
// on freshly drawn (or optionally fixed) ensembles.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steerkit/adjoint.hpp"
#include "steerkit/control_set.hpp"
#include "steerkit/dynamics.hpp"
#include "steerkit/ensemble.hpp"
#include "steerkit/gradstep.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/rng.hpp"
#include "steerkit/snapshot.hpp"
#include "steerkit/target_field.hpp"
#include "steerkit/target_map.hpp"

namespace steerkit {

struct DescentConfig {
  double alpha = 0.1;            // step size
  int iterations = 0;            // K
  int samples = 100000;          // objective-ensemble size N
  std::uint64_t seed = 0;
  bool fixed_ensemble = false;   // reuse the k=0 draw for every iteration
  int snapshot_every = 0;        // freeze iterates onto a grid every j sweeps
  std::vector<GridAxis> snapshot_axes;
  int residual_samples = 4096;   // residuals use the first min(N, this) samples

  SchedulePtr system;
  PolicySchedule initial;        // φ⁰
  TargetMap target;              // per-sample steering map 𝔱
  TargetFieldPtr field;          // conditional-target estimator for gradients
  // When > 0, ignore `field` and refit a knn estimator of that order on each
  // iteration's residual subsample (costly per gradient query; intended for
  // small ensembles probing non-injective flows).
  int knn_refit_k = 0;
  ControlSet control_set = ControlSet::full_space();
  InitialLaw law;
};

struct IterationRecord {
  int k = 0;
  double objective = 0.0;
  std::vector<double> stationarity;  // per stage, t = 0..T-1
  std::vector<double> recurrence;    // per stage, t = 1..T-1
  double wall_ms = 0.0;              // measured; excluded from deterministic output
};

struct DescentLog {
  std::vector<IterationRecord> records;  // K+1 entries, k = 0..K
  PolicySchedule final_policy;
};

// Called after each iterate's evaluation with the fresh record, the incumbent
// schedule, and the ensemble it was scored on.
using DescentObserver = std::function<void(
    const IterationRecord&, const PolicySchedule&, const Ensemble&)>;

namespace detail {

// Depth of each schedule slot after simulating the descent updates and
// snapshot resets, tracking the worst depth any residual jacobian will see.
// Returns that worst depth (its +1 jacobian level must fit the ladder).
inline int simulate_descent_depth(std::vector<int> depth, int iterations,
                                  int snapshot_every) {
  const int T = static_cast<int>(depth.size());
  int worst = 0;
  for (int t = 0; t < T; ++t) worst = std::max(worst, depth[t]);
  for (int k = 1; k <= iterations; ++k) {
    std::vector<int> next(depth.size());
    for (int t = 0; t < T; ++t) {
      int tail = 0;
      for (int s = t + 1; s < T; ++s) tail = std::max(tail, depth[s]);
      next[t] = std::max(depth[t], 1 + tail);
    }
    depth = std::move(next);
    for (int t = 0; t < T; ++t) worst = std::max(worst, depth[t]);
    if (snapshot_every > 0 && k % snapshot_every == 0)
      std::fill(depth.begin(), depth.end(), 0);
  }
  return worst;
}

}  // namespace detail

inline void validate_descent_config(const DescentConfig& cfg) {
  if (!cfg.system) throw std::invalid_argument("descent: no system configured");
  if (!cfg.field && cfg.knn_refit_k <= 0)
    throw std::invalid_argument("descent: no target field configured");
  const DynamicsSchedule& sys = *cfg.system;
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha))
    throw std::invalid_argument("descent: step size must be >= 0 and finite");
  if (cfg.iterations < 0)
    throw std::invalid_argument("descent: iteration count must be >= 0");
  if (cfg.samples < 1)
    throw std::invalid_argument("descent: sample count must be >= 1");
  if (cfg.residual_samples < 1)
    throw std::invalid_argument("descent: residual sample count must be >= 1");
  if (static_cast<int>(cfg.initial.size()) != sys.T)
    throw std::invalid_argument("descent: initial schedule length != horizon");
  check_schedule(cfg.initial, sys.n, sys.m);
  if (cfg.law.dim() != sys.n)
    throw std::invalid_argument("descent: initial law dimension mismatch");
  if (cfg.control_set.kind != ControlSet::Kind::FullSpace &&
      cfg.control_set.dim() != sys.m)
    throw std::invalid_argument("descent: control-set dimension mismatch");
  if (cfg.knn_refit_k > 0 && cfg.knn_refit_k > cfg.residual_samples)
    throw std::invalid_argument(
        "descent: knn order exceeds the residual subsample it is fitted on");
  if (cfg.knn_refit_k <= 0 && !cfg.field->pointwise_everywhere() && sys.T > 1)
    throw std::invalid_argument(
        "descent: the per-sample target field has no pointwise value after "
        "stage 0, so descent steps cannot be evaluated off-sample for "
        "horizons > 1; use a constant or knn target field instead");
  if (cfg.snapshot_every < 0)
    throw std::invalid_argument("descent: snapshot period must be >= 0");
  if (cfg.snapshot_every > 0 &&
      static_cast<int>(cfg.snapshot_axes.size()) != sys.n)
    throw std::invalid_argument(
        "descent: snapshot grid must cover every state dimension");

  std::vector<int> depths;
  depths.reserve(cfg.initial.size());
  for (const auto& node : cfg.initial) depths.push_back(node->depth());
  const int worst = detail::simulate_descent_depth(depths, cfg.iterations,
                                                   cfg.snapshot_every);
  if (worst + 1 > kMaxLadder)
    throw std::invalid_argument(
        "descent: " + std::to_string(cfg.iterations) +
        " iterations would stack " + std::to_string(worst) +
        " re-differentiation levels (ladder holds " +
        std::to_string(kMaxLadder - 1) +
        "); set snapshot_every between 1 and " +
        std::to_string(kMaxLadder - 1));
}

inline DescentLog run(const DescentConfig& cfg,
                      const DescentObserver& observer = nullptr) {
  validate_descent_config(cfg);
  const DynamicsSchedule& sys = *cfg.system;

  DescentLog log;
  log.records.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  PolicySchedule phi = cfg.initial;
  TargetFieldPtr field = cfg.field;

  for (int k = 0; k <= cfg.iterations; ++k) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t draw_seed =
        derive_iteration_seed(cfg.seed, cfg.fixed_ensemble ? 0u
                                                           : static_cast<std::uint64_t>(k));
    const std::vector<Vec<double>> x0s =
        sample_initial(cfg.law, cfg.samples, draw_seed);
    const Ensemble ens = rollout(sys, phi, x0s, cfg.target, draw_seed);
    const double J = objective(ens);
    if (!std::isfinite(J))
      throw std::runtime_error("descent: non-finite objective at iteration " +
                               std::to_string(k));

    IterationRecord rec;
    rec.k = k;
    rec.objective = J;
    const int rs = cfg.residual_samples < ens.N ? cfg.residual_samples : ens.N;
    const Ensemble sub = rs == ens.N ? ens : head(ens, rs);
    if (cfg.knn_refit_k > 0) field = fit_knn_field(sub, cfg.knn_refit_k);
    const AdjointTrace trace = costates(sub, sys, phi, *field);
    rec.stationarity =
        stationarity_residual(trace, sys, phi, sub, cfg.control_set);
    rec.recurrence = recurrence_residual(trace, sys, phi, sub);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    log.records.push_back(std::move(rec));
    if (observer) observer(log.records.back(), phi, ens);
    if (k == cfg.iterations) break;

    phi = grad_step(phi, cfg.alpha,
                    GradientContext{cfg.system, field, cfg.control_set});
    if (cfg.snapshot_every > 0 && (k + 1) % cfg.snapshot_every == 0)
      phi = snapshot_schedule(phi, cfg.snapshot_axes);
  }
  log.final_policy = phi;
  return log;
}

}  // namespace steerkit
