#pragma once

// Deterministic text emission.  All numeric output is rendered with 17
// significant digits (round-trip exact for IEEE doubles) through one helper,
// and JSON lines are assembled by hand with a fixed key order, so identical
// runs produce byte-identical files.  Wall-clock timings are never written
// into log.jsonl — they go to a timings.jsonl sidecar, keeping the run log
// reproducible.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerkit/descent.hpp"
#include "steerkit/ensemble.hpp"
#include "steerkit/policy.hpp"

namespace steerkit {

inline constexpr int kLogSchemaVersion = 1;

inline std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_float_array(const std::vector<double>& vs) {
  std::string out = "[";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += format_float(vs[i]);
  }
  out += "]";
  return out;
}

// One deterministic run-log line: schema tag, iterate index, objective, and
// the per-stage residual arrays.
inline std::string log_record_line(const IterationRecord& rec) {
  std::string line = "{\"schema_version\":";
  line += std::to_string(kLogSchemaVersion);
  line += ",\"k\":";
  line += std::to_string(rec.k);
  line += ",\"objective\":";
  line += format_float(rec.objective);
  line += ",\"stationarity\":";
  line += format_float_array(rec.stationarity);
  line += ",\"recurrence\":";
  line += format_float_array(rec.recurrence);
  line += "}";
  return line;
}

// Companion timing line (measured, non-reproducible by nature).
inline std::string timing_record_line(const IterationRecord& rec) {
  std::string line = "{\"schema_version\":";
  line += std::to_string(kLogSchemaVersion);
  line += ",\"k\":";
  line += std::to_string(rec.k);
  line += ",\"wall_ms\":";
  line += format_float(rec.wall_ms);
  line += "}";
  return line;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("output: cannot create directory '" + dir +
                             "': " + ec.message());
}

// samples_k{k}_t{t}.csv for every stage t = 0..T: sample_id plus the state
// components at that stage.
inline void write_sample_csvs(const std::string& dir, int k,
                              const Ensemble& ens) {
  for (int t = 0; t <= ens.T; ++t) {
    const std::string path = dir + "/samples_k" + std::to_string(k) + "_t" +
                             std::to_string(t) + ".csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("output: cannot write '" + path + "'");
    out << "sample_id";
    for (int j = 0; j < ens.n; ++j) out << ",x" << j;
    out << "\n";
    for (int i = 0; i < ens.N; ++i) {
      out << i;
      const Vec<double> x = ens.x(i, t);
      for (int j = 0; j < ens.n; ++j) out << "," << format_float(x[j]);
      out << "\n";
    }
  }
}

// policy_k{k}.csv: every stage's policy tabulated over the square mesh
// [lo, hi]^n with `resolution` nodes per axis.  Columns: stage, state
// components, control components; rows ordered stage-major then row-major
// over the mesh.
inline void write_policy_mesh_csv(const std::string& dir, int k,
                                  const PolicySchedule& phi, int n, int m,
                                  double lo, double hi, int resolution) {
  const std::string path = dir + "/policy_k" + std::to_string(k) + ".csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("output: cannot write '" + path + "'");
  out << "t";
  for (int j = 0; j < n; ++j) out << ",x" << j;
  for (int j = 0; j < m; ++j) out << ",u" << j;
  out << "\n";
  const double h = (hi - lo) / static_cast<double>(resolution - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const std::size_t total = [&] {
    std::size_t p = 1;
    for (int j = 0; j < n; ++j) p *= static_cast<std::size_t>(resolution);
    return p;
  }();
  Vec<double> x(n);
  for (std::size_t t = 0; t < phi.size(); ++t) {
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      for (int j = n - 1; j >= 0; --j) {
        idx[static_cast<std::size_t>(j)] =
            static_cast<int>(rem % static_cast<std::size_t>(resolution));
        rem /= static_cast<std::size_t>(resolution);
      }
      for (int j = 0; j < n; ++j)
        x[j] = lo + h * static_cast<double>(idx[static_cast<std::size_t>(j)]);
      const Vec<double> u = policy_eval(*phi[t], x);
      out << t;
      for (int j = 0; j < n; ++j) out << "," << format_float(x[j]);
      for (int j = 0; j < m; ++j) out << "," << format_float(u[j]);
      out << "\n";
    }
  }
}

}  // namespace steerkit
