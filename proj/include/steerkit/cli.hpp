#pragma once

// Command implementations behind the `steerkit` binary: `run` executes a
// descent described by a config file and writes logs/CSVs, `verify` runs the
// built-in check suites, `gradcheck` compares the gradient formula against
// finite differences on a config's problem.
//
// Exit codes: run — 0 ok, 2 invalid config, 3 numerical failure;
// verify — 0 all pass, 1 any failure; gradcheck — 0 within tolerance,
// 1 breach, 2 invalid request.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "steerkit/config.hpp"
#include "steerkit/descent.hpp"
#include "steerkit/output.hpp"
#include "steerkit/suites.hpp"

namespace steerkit {

namespace cli_detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Iterations whose policy (and optionally sample clouds) get tabulated to
// CSV: the early iterates, a couple of mid-run checkpoints, and the last.
inline std::set<int> tabulated_iterations(int iterations) {
  std::set<int> keep;
  for (int k : {0, 1, 2, 5, 10, iterations})
    if (k >= 0 && k <= iterations) keep.insert(k);
  return keep;
}

}  // namespace cli_detail

inline int cmd_run(const std::string& config_path, std::ostream& out,
                   std::ostream& err) {
  RunSpec spec;
  try {
    spec = parse_run_config(config_path);
    validate_descent_config(spec.descent);
  } catch (const std::exception& e) {
    err << "invalid config: " << e.what() << "\n";
    return 2;
  }

  try {
    ensure_dir(spec.output.dir);
    std::ofstream log(spec.output.dir + "/log.jsonl",
                      std::ios::out | std::ios::trunc);
    std::ofstream timings(spec.output.dir + "/timings.jsonl",
                          std::ios::out | std::ios::trunc);
    if (!log || !timings)
      throw std::runtime_error("cannot open output files under '" +
                               spec.output.dir + "'");
    const std::set<int> keep =
        cli_detail::tabulated_iterations(spec.descent.iterations);
    const int n = spec.descent.system->n;
    const int m = spec.descent.system->m;

    DescentObserver observer = [&](const IterationRecord& rec,
                                   const PolicySchedule& phi,
                                   const Ensemble& ens) {
      log << log_record_line(rec) << "\n";
      timings << timing_record_line(rec) << "\n";
      if (keep.count(rec.k)) {
        write_policy_mesh_csv(spec.output.dir, rec.k, phi, n, m,
                              spec.output.mesh_lo, spec.output.mesh_hi,
                              spec.output.mesh_resolution);
        if (spec.output.emit_samples)
          write_sample_csvs(spec.output.dir, rec.k, ens);
      }
    };

    const DescentLog result = run(spec.descent, observer);
    log.flush();
    timings.flush();
    if (!log || !timings)
      throw std::runtime_error("writing output files failed");

    const IterationRecord& last = result.records.back();
    out << "run complete: " << spec.descent.iterations << " iterations, "
        << spec.descent.samples << " samples\n";
    out << "objective: " << format_float(result.records.front().objective)
        << " -> " << format_float(last.objective) << "\n";
    out << "outputs in " << spec.output.dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return 3;
  }
}

inline int cmd_verify(const std::string& filter, std::ostream& out) {
  const std::vector<SuiteResult> results = run_verify_suites(filter);
  if (results.empty()) {
    out << "{\"error\":\"no suite matches filter '"
        << cli_detail::json_escape(filter) << "'\"}\n";
    return 1;
  }
  int failed = 0;
  for (const SuiteResult& r : results) {
    if (!r.pass) ++failed;
    out << "{\"suite\":\"" << cli_detail::json_escape(r.name)
        << "\",\"pass\":" << (r.pass ? "true" : "false") << ",\"detail\":\""
        << cli_detail::json_escape(r.detail) << "\"}\n";
  }
  out << "{\"total\":" << results.size() << ",\"passed\":"
      << (results.size() - static_cast<std::size_t>(failed))
      << ",\"failed\":" << failed << "}\n";
  return failed > 0 ? 1 : 0;
}

inline int cmd_gradcheck(const std::string& config_path,
                         const GradcheckOptions& opt, double tol,
                         std::ostream& out, std::ostream& err) {
  RunSpec spec;
  try {
    spec = parse_run_config(config_path);
    if (opt.points < 1)
      throw std::invalid_argument("gradcheck: cloud size must be >= 1");
    if (opt.iterates < 1 || opt.directions < 1)
      throw std::invalid_argument("gradcheck: iterates/directions must be >= 1");
  } catch (const std::exception& e) {
    err << "invalid request: " << e.what() << "\n";
    return 2;
  }

  GradcheckReport rep;
  try {
    rep = run_gradcheck(spec.descent, opt);
  } catch (const std::exception& e) {
    err << "invalid request: " << e.what() << "\n";
    return 2;
  }

  for (const GradcheckPair& p : rep.pairs)
    out << "iterate " << p.iterate << " stage " << p.stage << " direction "
        << p.direction << ": formula " << format_float(p.formula) << ", fd "
        << format_float(p.fd) << ", rel " << format_float(p.rel) << "\n";
  out << "gradcheck: " << rep.pairs.size() << " pairs, worst rel "
      << format_float(rep.max_rel) << " (tolerance " << format_float(tol)
      << ")\n";
  if (!rep.pass(tol)) {
    const GradcheckPair& w = rep.pairs[static_cast<std::size_t>(rep.worst)];
    err << "tolerance breached at iterate " << w.iterate << ", stage "
        << w.stage << ", direction " << w.direction << " (rel "
        << format_float(w.rel) << ")\n";
    return 1;
  }
  return 0;
}

}  // namespace steerkit
