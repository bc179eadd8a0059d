#pragma once

// Run-configuration files: strict JSON documents with fixed sections.  Every
// key is checked against the schema (unknown keys are rejected with their
// path), required fields are named in error messages, and defaults are
// applied per field as documented in the README.

#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "steerkit/descent.hpp"
#include "steerkit/dynamics.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/snapshot.hpp"
#include "steerkit/target_field.hpp"
#include "steerkit/target_map.hpp"

namespace steerkit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputOptions {
  std::string dir = "out";
  bool emit_samples = false;
  double mesh_lo = -8.0;
  double mesh_hi = 8.0;
  int mesh_resolution = 81;
};

struct RunSpec {
  DescentConfig descent;
  OutputOptions output;
};

namespace config_detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError("config: " + path + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + path + "." + it.key() + "'");
}

inline double get_number(const json& obj, const std::string& path,
                         const std::string& key) {
  if (!obj.contains(key))
    throw ConfigError("config: missing required field '" + path + "." + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number())
    throw ConfigError("config: '" + path + "." + key + "' must be a number");
  return v.get<double>();
}

inline double get_number_or(const json& obj, const std::string& path,
                            const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number())
    throw ConfigError("config: '" + path + "." + key + "' must be a number");
  return v.get<double>();
}

inline int get_int_or(const json& obj, const std::string& path,
                      const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError("config: '" + path + "." + key + "' must be an integer");
  return v.get<int>();
}

inline bool get_bool_or(const json& obj, const std::string& path,
                        const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean())
    throw ConfigError("config: '" + path + "." + key + "' must be a boolean");
  return v.get<bool>();
}

inline std::string get_string_or(const json& obj, const std::string& path,
                                 const std::string& key,
                                 const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string())
    throw ConfigError("config: '" + path + "." + key + "' must be a string");
  return v.get<std::string>();
}

inline Vec<double> get_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError("config: '" + where + "' must be a non-empty array");
  Vec<double> out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError("config: '" + where + "' must contain numbers");
    out[static_cast<int>(i)] = v[i].get<double>();
  }
  return out;
}

inline Mat<double> get_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError("config: '" + where + "' must be a non-empty array of rows");
  const int rows = static_cast<int>(v.size());
  int cols = -1;
  Mat<double> out;
  for (int r = 0; r < rows; ++r) {
    Vec<double> row = get_vector(v[static_cast<std::size_t>(r)],
                                 where + "[" + std::to_string(r) + "]");
    if (cols < 0) {
      cols = row.size();
      out = Mat<double>(rows, cols);
    } else if (row.size() != cols) {
      throw ConfigError("config: '" + where + "' rows have unequal lengths");
    }
    for (int c = 0; c < cols; ++c) out(r, c) = row[c];
  }
  return out;
}

}  // namespace config_detail

inline RunSpec parse_run_config_json(const nlohmann::json& doc,
                                     const std::string& source) {
  using namespace config_detail;
  if (!doc.is_object())
    throw ConfigError("config: " + source + " must hold a JSON object");
  reject_unknown(doc, source,
                 {"system", "initial_law", "target", "control_set", "policy0",
                  "descent", "output"});
  if (!doc.contains("system"))
    throw ConfigError("config: missing required section 'system'");
  if (!doc.contains("policy0"))
    throw ConfigError("config: missing required section 'policy0'");
  if (!doc.contains("descent"))
    throw ConfigError("config: missing required section 'descent'");

  RunSpec spec;

  // --- system -----------------------------------------------------------
  const json& jsys = doc.at("system");
  reject_unknown(jsys, "system", {"name", "params"});
  const std::string name = get_string_or(jsys, "system", "name", "");
  if (name.empty())
    throw ConfigError("config: missing required field 'system.name'");
  RegistryParams params;
  if (jsys.contains("params")) {
    const json& jp = jsys.at("params");
    if (!jp.is_object())
      throw ConfigError("config: 'system.params' must be an object");
    for (auto it = jp.begin(); it != jp.end(); ++it) {
      if (!it.value().is_number())
        throw ConfigError("config: 'system.params." + it.key() +
                          "' must be a number");
      params[it.key()] = it.value().get<double>();
    }
  }
  try {
    spec.descent.system = registry_get(name, params);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: system: ") + e.what());
  }
  const DynamicsSchedule& sys = *spec.descent.system;

  // --- initial law (default: standard gaussian) --------------------------
  if (doc.contains("initial_law")) {
    const json& jlaw = doc.at("initial_law");
    reject_unknown(jlaw, "initial_law", {"type", "mean", "cov", "points"});
    const std::string type = get_string_or(jlaw, "initial_law", "type", "gaussian");
    if (type == "gaussian") {
      Vec<double> mean(sys.n);
      Mat<double> cov = Mat<double>::identity(sys.n);
      if (jlaw.contains("mean")) mean = get_vector(jlaw.at("mean"), "initial_law.mean");
      if (jlaw.contains("cov")) cov = get_matrix(jlaw.at("cov"), "initial_law.cov");
      try {
        spec.descent.law = InitialLaw::gaussian(mean, cov);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: initial_law: ") + e.what());
      }
    } else if (type == "point_cloud") {
      if (!jlaw.contains("points"))
        throw ConfigError("config: missing required field 'initial_law.points'");
      const json& jpts = jlaw.at("points");
      if (!jpts.is_array() || jpts.empty())
        throw ConfigError("config: 'initial_law.points' must be a non-empty array");
      std::vector<Vec<double>> pts;
      pts.reserve(jpts.size());
      for (std::size_t i = 0; i < jpts.size(); ++i)
        pts.push_back(get_vector(jpts[i], "initial_law.points[" +
                                              std::to_string(i) + "]"));
      try {
        spec.descent.law = InitialLaw::point_cloud(std::move(pts));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: initial_law: ") + e.what());
      }
    } else {
      throw ConfigError("config: 'initial_law.type' must be 'gaussian' or "
                        "'point_cloud', got '" + type + "'");
    }
  } else {
    spec.descent.law = InitialLaw::standard_gaussian(sys.n);
  }

  // --- target map + conditional-target field -----------------------------
  std::string field_kind;
  int knn_k = 16;
  if (doc.contains("target")) {
    const json& jtgt = doc.at("target");
    reject_unknown(jtgt, "target", {"type", "c", "field", "knn_k"});
    const std::string type = get_string_or(jtgt, "target", "type", "zero");
    if (type == "zero") {
      spec.descent.target = TargetMap::zero();
    } else if (type == "identity") {
      spec.descent.target = TargetMap::identity();
    } else if (type == "shift") {
      if (!jtgt.contains("c"))
        throw ConfigError("config: target type 'shift' needs field 'target.c'");
      Vec<double> c = get_vector(jtgt.at("c"), "target.c");
      if (c.size() != sys.n)
        throw ConfigError("config: 'target.c' must have the state dimension");
      spec.descent.target = TargetMap::shift(c);
    } else {
      throw ConfigError("config: 'target.type' must be 'zero', 'shift', or "
                        "'identity', got '" + type + "'");
    }
    field_kind = get_string_or(jtgt, "target", "field", "");
    knn_k = get_int_or(jtgt, "target", "knn_k", 16);
  } else {
    spec.descent.target = TargetMap::zero();
  }
  if (field_kind.empty())
    field_kind =
        spec.descent.target.kind == TargetMap::Kind::Zero ? "constant" : "pathwise";
  if (field_kind == "constant") {
    if (spec.descent.target.kind != TargetMap::Kind::Zero)
      throw ConfigError(
          "config: 'target.field' = 'constant' is exact only for the zero "
          "target; use 'pathwise' (horizon 1) or 'knn' instead");
    spec.descent.field = std::make_shared<ConstantField>(Vec<double>(sys.n));
  } else if (field_kind == "pathwise") {
    spec.descent.field =
        std::make_shared<PathwiseField>(spec.descent.target, sys.T);
  } else if (field_kind == "knn") {
    if (knn_k < 1)
      throw ConfigError("config: 'target.knn_k' must be >= 1");
    spec.descent.knn_refit_k = knn_k;
  } else {
    throw ConfigError("config: 'target.field' must be 'constant', 'pathwise', "
                      "or 'knn', got '" + field_kind + "'");
  }

  // --- control set (default: unconstrained) ------------------------------
  if (doc.contains("control_set")) {
    const json& jset = doc.at("control_set");
    reject_unknown(jset, "control_set", {"type", "lo", "hi", "center", "radius"});
    const std::string type = get_string_or(jset, "control_set", "type", "full_space");
    try {
      if (type == "full_space") {
        spec.descent.control_set = ControlSet::full_space();
      } else if (type == "box") {
        if (!jset.contains("lo") || !jset.contains("hi"))
          throw ConfigError("config: control_set type 'box' needs 'lo' and 'hi'");
        spec.descent.control_set =
            ControlSet::box(get_vector(jset.at("lo"), "control_set.lo"),
                            get_vector(jset.at("hi"), "control_set.hi"));
      } else if (type == "ball") {
        if (!jset.contains("center") || !jset.contains("radius"))
          throw ConfigError(
              "config: control_set type 'ball' needs 'center' and 'radius'");
        spec.descent.control_set = ControlSet::ball(
            get_vector(jset.at("center"), "control_set.center"),
            get_number(jset, "control_set", "radius"));
      } else {
        throw ConfigError("config: 'control_set.type' must be 'full_space', "
                          "'box', or 'ball', got '" + type + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: control_set: ") + e.what());
    }
  }

  // --- initial policy -----------------------------------------------------
  {
    const json& jpol = doc.at("policy0");
    reject_unknown(jpol, "policy0", {"type", "A", "b", "c"});
    const std::string type = get_string_or(jpol, "policy0", "type", "");
    if (type.empty())
      throw ConfigError("config: missing required field 'policy0.type'");
    PolicyPtr node;
    try {
      if (type == "linear") {
        if (!jpol.contains("A"))
          throw ConfigError("config: policy0 type 'linear' needs matrix 'A'");
        Mat<double> A = get_matrix(jpol.at("A"), "policy0.A");
        Vec<double> b(A.rows());
        if (jpol.contains("b")) b = get_vector(jpol.at("b"), "policy0.b");
        node = std::make_shared<LinearPolicy>(A, b);
      } else if (type == "first_coordinate") {
        node = std::make_shared<FirstCoordinatePolicy>(sys.n);
      } else if (type == "constant") {
        if (!jpol.contains("c"))
          throw ConfigError("config: policy0 type 'constant' needs vector 'c'");
        node = std::make_shared<ConstantPolicy>(
            sys.n, get_vector(jpol.at("c"), "policy0.c"));
      } else {
        throw ConfigError("config: 'policy0.type' must be 'linear', "
                          "'first_coordinate', or 'constant', got '" + type + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: policy0: ") + e.what());
    }
    if (node->in_dim() != sys.n || node->out_dim() != sys.m)
      throw ConfigError("config: policy0 dimensions do not match the system");
    spec.descent.initial.assign(static_cast<std::size_t>(sys.T), node);
  }

  // --- descent parameters --------------------------------------------------
  {
    const json& jd = doc.at("descent");
    reject_unknown(jd, "descent",
                   {"alpha", "iters", "samples", "seed", "snapshot_every",
                    "fixed_ensemble", "residual_samples"});
    spec.descent.alpha = get_number(jd, "descent", "alpha");
    if (!(spec.descent.alpha > 0.0))
      throw ConfigError("config: 'descent.alpha' must be > 0");
    spec.descent.iterations = get_int_or(jd, "descent", "iters", 0);
    if (spec.descent.iterations < 0)
      throw ConfigError("config: 'descent.iters' must be >= 0");
    spec.descent.samples = get_int_or(jd, "descent", "samples", 100000);
    if (spec.descent.samples < 1)
      throw ConfigError("config: 'descent.samples' must be >= 1");
    const double seed = get_number_or(jd, "descent", "seed", 0.0);
    if (seed < 0.0)
      throw ConfigError("config: 'descent.seed' must be >= 0");
    spec.descent.seed = static_cast<std::uint64_t>(seed);
    spec.descent.snapshot_every = get_int_or(jd, "descent", "snapshot_every", 0);
    if (spec.descent.snapshot_every < 0)
      throw ConfigError("config: 'descent.snapshot_every' must be >= 0");
    spec.descent.fixed_ensemble =
        get_bool_or(jd, "descent", "fixed_ensemble", false);
    spec.descent.residual_samples =
        get_int_or(jd, "descent", "residual_samples", 4096);
    if (spec.descent.residual_samples < 1)
      throw ConfigError("config: 'descent.residual_samples' must be >= 1");
  }

  // --- output --------------------------------------------------------------
  if (doc.contains("output")) {
    const json& jout = doc.at("output");
    reject_unknown(jout, "output", {"dir", "emit_samples", "mesh"});
    spec.output.dir = get_string_or(jout, "output", "dir", "out");
    spec.output.emit_samples = get_bool_or(jout, "output", "emit_samples", false);
    if (jout.contains("mesh")) {
      const json& jm = jout.at("mesh");
      reject_unknown(jm, "output.mesh", {"lo", "hi", "resolution"});
      spec.output.mesh_lo = get_number_or(jm, "output.mesh", "lo", -8.0);
      spec.output.mesh_hi = get_number_or(jm, "output.mesh", "hi", 8.0);
      spec.output.mesh_resolution =
          get_int_or(jm, "output.mesh", "resolution", 81);
      if (!(spec.output.mesh_hi > spec.output.mesh_lo))
        throw ConfigError("config: 'output.mesh' needs hi > lo");
      if (spec.output.mesh_resolution < 2)
        throw ConfigError("config: 'output.mesh.resolution' must be >= 2");
    }
  }

  // The snapshot grid reuses the output mesh bounds on every state axis.
  if (spec.descent.snapshot_every > 0)
    spec.descent.snapshot_axes.assign(
        static_cast<std::size_t>(sys.n),
        GridAxis{spec.output.mesh_lo, spec.output.mesh_hi,
                 spec.output.mesh_resolution});

  return spec;
}

inline RunSpec parse_run_config_text(const std::string& text,
                                     const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("config: " + source + ": " + e.what());
  }
  return parse_run_config_json(doc, source);
}

inline RunSpec parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path);
}

}  // namespace steerkit
