// Copyright 2026 The meanking Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON file formats. Complex numbers are [re, im] pairs and every index
// stored in a file is 0-based.
//
//   basis set   {"dim": d, "bases": [[[[re, im] x d] x d vectors] x k]}
//   strategy    basis-set fields + {"omega": [...], "safe_vectors":
//               [{"x": [...], "eta": [...], "p": w, "residual": r}, ...]}
//   attack      {"d", "n", "d_E", "psi_abe": [...], "kraus": [[[re, im] x cols] x rows] x L]}
//   transcript  JSON lines: a header {"type": "header", "config": {...}} then
//               one {"b", "i", "x", "i_prime"} object per round

#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meanking/attack.hpp"
#include "meanking/bases.hpp"
#include "meanking/protocol.hpp"
#include "meanking/retrodiction.hpp"
#include "meanking/security.hpp"

namespace meanking::io {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw FormatError("expected a complex number as [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(complex_to_json(v(k)));
  return out;
}

inline CVector vector_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("expected an array of complex numbers");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(j[k]);
  return v;
}

/// Row-major: a list of rows.
inline Json matrix_to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

inline CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("expected a non-empty list of matrix rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  CMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const CVector row = vector_from_json(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) throw FormatError("ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field \"") + key + "\": " + e.what());
  }
}

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  return j[key];
}

inline Json parse(std::istream& in) {
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

inline Json parse(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

// --- basis sets ---------------------------------------------------------

inline Json basis_set_to_json(const BasisSet& bs) {
  Json bases = Json::array();
  for (const auto& basis : bs.bases()) {
    Json vecs = Json::array();
    for (std::size_t i = 0; i < bs.dim(); ++i) vecs.push_back(vector_to_json(basis.vector(i)));
    bases.push_back(std::move(vecs));
  }
  return Json{{"dim", bs.dim()}, {"bases", std::move(bases)}};
}

inline BasisSet basis_set_from_json(const Json& j) {
  const auto d = field<std::size_t>(j, "dim");
  if (d == 0) throw FormatError("\"dim\" must be positive");
  const Json& bases = member(j, "bases");
  if (!bases.is_array() || bases.empty()) throw FormatError("\"bases\" must be a non-empty array");
  std::vector<CMatrix> mats;
  for (const auto& basis : bases) {
    if (!basis.is_array() || basis.size() != d) throw FormatError("each basis must list exactly dim vectors");
    CMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      const CVector v = vector_from_json(basis[i]);
      if (static_cast<std::size_t>(v.size()) != d) throw FormatError("basis vector length differs from dim");
      m.col(static_cast<Eigen::Index>(i)) = v;
    }
    mats.push_back(std::move(m));
  }
  return BasisSet(d, mats);
}

inline Json validation_report_to_json(const ValidationReport& r) {
  return Json{{"orthonormal", r.orthonormal},
              {"unbiased", r.unbiased},
              {"nondegenerate", r.nondegenerate},
              {"span_rank", r.span_rank},
              {"classical_model", r.classical_model ? Json(*r.classical_model) : Json(nullptr)},
              {"worst_violation", r.worst_violation},
              {"unbiased_worst", r.unbiased_worst},
              {"passed", r.passed()}};
}

// --- strategies ---------------------------------------------------------

inline Json guessing_function_to_json(const GuessingFunction& x) { return Json(x.values); }

inline Json strategy_to_json(const Strategy& s) {
  Json j = basis_set_to_json(s.basis_set);
  j["omega"] = vector_to_json(s.omega);
  Json entries = Json::array();
  for (std::size_t x = 0; x < s.size(); ++x) {
    const auto& sv = s.safe_vectors[x];
    entries.push_back(Json{{"x", guessing_function_to_json(sv.x)},
                           {"eta", vector_to_json(sv.eta)},
                           {"p", s.weights(static_cast<Eigen::Index>(x))},
                           {"residual", sv.residual}});
  }
  j["safe_vectors"] = std::move(entries);
  return j;
}

inline Strategy strategy_from_json(const Json& j) {
  Strategy s;
  s.basis_set = basis_set_from_json(j);
  s.omega = vector_from_json(member(j, "omega"));
  const std::size_t d = s.basis_set.dim();
  if (static_cast<std::size_t>(s.omega.size()) != d * d) throw FormatError("\"omega\" must have dim^2 entries");
  const Json& entries = member(j, "safe_vectors");
  const std::size_t expected = guessing_function_count(d, s.basis_set.count());
  if (!entries.is_array() || entries.size() != expected) {
    throw FormatError("\"safe_vectors\" must hold one entry per guessing function (" + std::to_string(expected) + ")");
  }
  s.weights.resize(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Json& e = entries[k];
    SafeVector sv;
    sv.x.values = field<std::vector<std::size_t>>(e, "x");
    if (sv.x.size() != s.basis_set.count() || guessing_function_index(sv.x, d) != k) {
      throw FormatError("safe vector " + std::to_string(k) + " is out of order or malformed");
    }
    sv.eta = vector_from_json(member(e, "eta"));
    if (static_cast<std::size_t>(sv.eta.size()) != d * d) throw FormatError("\"eta\" must have dim^2 entries");
    sv.residual = field<double>(e, "residual");
    s.weights(static_cast<Eigen::Index>(k)) = field<double>(e, "p");
    s.safe_vectors.push_back(std::move(sv));
  }
  return s;
}

// --- attacks ------------------------------------------------------------

inline Json attack_to_json(const AttackModel& am) {
  Json kraus = Json::array();
  for (const auto& v : am.kraus) kraus.push_back(matrix_to_json(v));
  return Json{{"name", am.name}, {"d", am.d},   {"n", am.n}, {"d_E", am.d_E},
              {"psi_abe", vector_to_json(am.psi_abe)}, {"kraus", std::move(kraus)}};
}

/// Parses and validates an attack file.
inline AttackModel attack_from_json(const Json& j) {
  AttackModel am;
  am.name = j.contains("name") ? field<std::string>(j, "name") : std::string("file");
  am.d = field<std::size_t>(j, "d");
  am.n = field<std::size_t>(j, "n");
  am.d_E = field<std::size_t>(j, "d_E");
  am.psi_abe = vector_from_json(member(j, "psi_abe"));
  const Json& kraus = member(j, "kraus");
  if (!kraus.is_array()) throw FormatError("\"kraus\" must be an array of matrices");
  for (const auto& m : kraus) am.kraus.push_back(matrix_from_json(m));
  validate_attack(am);
  return am;
}

// --- reports ------------------------------------------------------------

inline Json commutant_report_to_json(const CommutantReport& r) {
  return Json{{"dim", r.dim},
              {"n", r.n},
              {"solution_dim", r.solution_dim},
              {"constraint_rank", r.constraint_rank},
              {"tol", r.tol},
              {"witness_identity_residual", r.identity_residual}};
}

inline Json attack_report_to_json(const AttackReport& r) {
  Json outcomes = Json::array();
  for (const auto& o : r.outcomes) {
    outcomes.push_back(Json{{"b", o.bvec}, {"i", o.ivec}, {"probability", o.probability}, {"guess_error", o.guess_error}});
  }
  return Json{{"detection_probability", r.detection_probability},
              {"leakage", r.leakage},
              {"per_outcome_guess_error", std::move(outcomes)}};
}

// --- transcripts --------------------------------------------------------

inline Json config_to_json(const ProtocolConfig& c) {
  return Json{{"d", c.d}, {"n", c.n}, {"rounds", c.rounds}, {"test_fraction", c.test_fraction}, {"seed", c.seed}};
}

inline ProtocolConfig config_from_json(const Json& j) {
  ProtocolConfig c;
  c.d = field<std::size_t>(j, "d");
  c.n = field<std::size_t>(j, "n");
  c.rounds = field<std::size_t>(j, "rounds");
  c.test_fraction = field<double>(j, "test_fraction");
  c.seed = field<std::uint64_t>(j, "seed");
  return c;
}

inline Json record_to_json(const RoundRecord& r) {
  return Json{{"b", r.b}, {"i", r.i}, {"x", guessing_function_to_json(r.x)}, {"i_prime", r.i_prime}};
}

inline void write_transcript(std::ostream& out, const Transcript& t) {
  out << Json{{"type", "header"}, {"config", config_to_json(t.config)}, {"seed", t.config.seed}, {"index_base", 0}}.dump()
      << '\n';
  for (const auto& r : t.records) out << record_to_json(r).dump() << '\n';
}

/// Reads records back; test positions and acceptance are recomputed.
inline Transcript read_transcript(std::istream& in) {
  Transcript t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = parse(line);
    if (!header) {
      if (!j.contains("type") || j["type"] != "header") throw FormatError("transcript must start with a header line");
      t.config = config_from_json(member(j, "config"));
      header = true;
      continue;
    }
    RoundRecord r;
    r.b = field<std::size_t>(j, "b");
    r.i = field<std::size_t>(j, "i");
    r.x.values = field<std::vector<std::size_t>>(j, "x");
    r.i_prime = field<std::size_t>(j, "i_prime");
    t.records.push_back(std::move(r));
  }
  if (!header) throw FormatError("empty transcript");
  const auto sift = sift_and_test(t);
  t.test_indices = sift.test_indices;
  t.accepted = sift.accepted;
  return t;
}

}  // namespace meanking::io
