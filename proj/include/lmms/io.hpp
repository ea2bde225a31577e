#pragma once

// JSON serialization of instances, couplings, laws, results and reports.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmms/box.hpp"
#include "lmms/core.hpp"
#include "lmms/coupling.hpp"
#include "lmms/reconstruct.hpp"
#include "lmms/solvers.hpp"
#include "lmms/sprinkle.hpp"
#include "lmms/witness.hpp"

namespace lmms::io {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw FormatError(what + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw FormatError(what + ": not finite");
  if (x < 0.0) throw FormatError(what + ": negative");
  return x;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of rows");
  const std::size_t n = j.size();
  const std::size_t m = n ? j[0].size() : 0;
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != m) throw FormatError(what + ": ragged rows");
    for (std::size_t k = 0; k < m; ++k)
      out(i, k) = number(j[i][k], what + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instances

inline json to_json(const FiniteLMMS& s) {
  json j;
  j["labels"] = s.labels;
  j["tau"] = matrix_json(s.tau);
  j["weights"] = s.weights;
  j["boundary"] = s.boundary ? json(*s.boundary) : json(nullptr);
  return j;
}

inline FiniteLMMS space_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("instance: expected an object");
  for (const char* key : {"labels", "tau", "weights"})
    if (!j.contains(key)) throw FormatError(std::string("instance: missing '") + key + "'");
  FiniteLMMS s;
  const Matrix tau = matrix_from_json(j.at("tau"), "tau");
  if (tau.rows() != tau.cols()) throw FormatError("tau must be square");
  s.tau = TimeMatrix(tau);
  if (!j.at("labels").is_array()) throw FormatError("labels: expected an array");
  for (const auto& l : j.at("labels")) {
    if (!l.is_string()) throw FormatError("labels: expected strings");
    s.labels.push_back(l.get<std::string>());
  }
  if (!j.at("weights").is_array()) throw FormatError("weights: expected an array");
  for (std::size_t i = 0; i < j.at("weights").size(); ++i)
    s.weights.push_back(number(j.at("weights")[i], "weights[" + std::to_string(i) + "]"));
  if (j.contains("boundary") && !j.at("boundary").is_null()) {
    if (!j.at("boundary").is_number_unsigned()) throw FormatError("boundary: expected an index or null");
    s.boundary = j.at("boundary").get<std::size_t>();
  }
  check_shape(s);
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

inline json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

inline FiniteLMMS read_space(const std::string& path) { return space_from_json(parse(read_file(path), path)); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_space(const std::string& path, const FiniteLMMS& s) { write_file(path, dump(to_json(s))); }

/// FNV-1a over the bytes, as 16 hex digits.
inline std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the compact serialization, independent of file formatting.
inline std::string instance_hash(const FiniteLMMS& s) { return fnv1a(to_json(s).dump()); }

// ---------------------------------------------------------------------------
// Couplings, witnesses and results

inline json coupling_json(const Coupling& pi, const FiniteLMMS& a, const FiniteLMMS& b) {
  return {{"matrix", matrix_json(pi)}, {"a_hash", instance_hash(a)}, {"b_hash", instance_hash(b)}};
}

inline Coupling coupling_from_json(const json& j, const FiniteLMMS& a, const FiniteLMMS& b) {
  if (!j.is_object() || !j.contains("matrix")) throw FormatError("coupling: missing 'matrix'");
  if (j.contains("a_hash") && j.at("a_hash") != instance_hash(a)) throw FormatError("coupling: first instance differs");
  if (j.contains("b_hash") && j.at("b_hash") != instance_hash(b)) throw FormatError("coupling: second instance differs");
  Coupling pi(matrix_from_json(j.at("matrix"), "coupling"));
  if (!is_coupling_of(pi, a.weights, b.weights)) throw FormatError("coupling: marginals do not match the instances");
  return pi;
}

inline json to_json(const Parametrization& p) {
  json segs = json::array();
  for (const auto& s : p.segments) segs.push_back({{"point", s.point}, {"length", s.length}});
  return segs;
}

inline json to_json(const Correspondence& r) {
  json pairs = json::array();
  for (auto [i, j] : r.pairs) pairs.push_back({i, j});
  return pairs;
}

inline json to_json(const DistanceResult& r, const FiniteLMMS& a, const FiniteLMMS& b) {
  json j;
  j["value"] = r.value;
  j["method"] = to_string(r.method);
  j["certified"] = r.certified;
  j["iterations"] = r.iterations;
  j["seed"] = r.seed;
  if (r.correspondence) {
    j["witness"] = {{"correspondence", to_json(*r.correspondence)}};
  } else {
    j["witness"] = coupling_json(r.coupling, a, b);
  }
  if (r.box) {
    json q = json::array();
    for (const auto& iv : r.box->deleted) q.push_back({iv.lo, iv.hi});
    j["witness"]["parametrizations"] = {to_json(r.box->pa), to_json(r.box->pb)};
    j["witness"]["deleted"] = q;
    j["witness"]["lambda"] = r.box->lambda;
  }
  return j;
}

inline json to_json(const ValidationReport& rep) {
  json v = json::array();
  for (const auto& x : rep.violations) {
    v.push_back({{"severity", x.severity == Severity::error ? "error" : "warning"},
                 {"axiom", to_string(x.axiom)},
                 {"indices", x.indices},
                 {"message", x.message}});
  }
  return {{"ok", rep.ok()}, {"violations", v}, {"suppressed", rep.suppressed}};
}

// ---------------------------------------------------------------------------
// Laws and reports

inline json to_json(const MatrixLaw& law) {
  json atoms = json::array();
  for (const auto& [key, a] : law.atoms) atoms.push_back({{"matrix", matrix_json(a.matrix)}, {"mass", a.mass}});
  return {{"k", law.k}, {"atoms", atoms}};
}

inline MatrixLaw law_from_json(const json& j) {
  if (!j.is_object() || !j.contains("k") || !j.contains("atoms")) throw FormatError("law: expected {k, atoms}");
  MatrixLaw law{j.at("k").get<std::size_t>(), {}};
  for (const auto& a : j.at("atoms")) law.add(matrix_from_json(a.at("matrix"), "atom"), number(a.at("mass"), "mass"));
  return law;
}

inline json to_json(const IsomorphyResult& r) {
  json w = json::array();
  for (auto [i, j] : r.witness) w.push_back({i, j});
  return {{"isomorphic", r.isomorphic}, {"witness", r.isomorphic ? w : json(nullptr)}};
}

inline json to_json(const ReconstructionReport& rep) {
  json ks = json::array();
  for (const auto& c : rep.per_k) {
    json e{{"k", c.k}, {"exact", c.exact}, {"tv", c.tv}, {"family_gap", c.family_gap}, {"equal", c.equal}};
    if (c.bootstrap) {
      e["bootstrap"] = {{"observed", c.bootstrap->observed},
                        {"mean", c.bootstrap->mean},
                        {"sd", c.bootstrap->sd},
                        {"distinguishable", c.bootstrap->distinguishable}};
    }
    ks.push_back(std::move(e));
  }
  json w = json::array();
  for (auto [i, j] : rep.witness) w.push_back({i, j});
  return {{"per_k", ks},
          {"intrinsic_D", rep.intrinsic_D},
          {"isomorphic", rep.isomorphic},
          {"witness", rep.isomorphic ? w : json(nullptr)},
          {"laws_agree", rep.laws_agree},
          {"verdicts_agree", rep.verdicts_agree}};
}

inline json to_json(const SprinkleConfig& c) {
  json j{{"dim", c.dim},
         {"T", c.half_height},
         {"mode", c.mode == SprinkleMode::iid ? "iid" : "poisson"},
         {"seed", c.seed},
         {"drop_boundary", c.drop_boundary}};
  if (c.mode == SprinkleMode::iid) {
    j["n"] = c.n;
  } else {
    j["intensity"] = c.intensity;
  }
  return j;
}

inline json sidecar_json(const Sprinkling& s) {
  return {{"config", to_json(s.config)}, {"coordinates", s.coordinates}};
}

}  // namespace lmms::io
