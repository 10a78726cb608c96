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

// Operators that have every safe (product) vector as an eigenvector.
//
// "E eta parallel to eta" is linear in E once written as
// (1 - eta_hat eta_hat^dagger) E eta = 0. Stacking these blocks for all safe
// vectors gives a linear system on vec(E); its nullspace is the space of
// admissible operators, which always contains the identity.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meanking/qmath.hpp"
#include "meanking/retrodiction.hpp"

namespace meanking {

class SpanningError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CommutantReport {
  std::size_t dim = 0;  // d of the single-round space
  std::size_t n = 1;
  std::size_t space_dim = 0;  // dimension N of the operators' space
  std::size_t constraint_rank = 0;
  std::size_t solution_dim = 0;
  CMatrix witness;  // N x N; a unit-norm element of the solution space
  double tol = kDefaultTol;
  /// ||W - (tr W / N) 1|| / ||W|| for the witness.
  double identity_residual = 0.0;
};

enum class SpanCheck { kRequire, kSkip };

/// Row-major vec(E) constraint block for one vector: (1 - eta_hat eta_hat^dagger)(1 x eta^T).
inline CMatrix eigenvector_constraint_block(const CVector& eta) {
  const auto n = eta.size();
  const CVector unit = eta.normalized();
  const CMatrix q = CMatrix::Identity(n, n) - projector(unit);
  CMatrix block = CMatrix::Zero(n, n * n);
  // (E eta)_r = sum_c E(r, c) eta_c, with E(r, c) at column r * n + c.
  for (Eigen::Index r = 0; r < n; ++r) block.block(0, r * n, n, n) = q.col(r) * eta.transpose();
  return block;
}

inline CMatrix eigenvector_constraint_matrix(std::span<const CVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("eigenvector constraints: no vectors");
  const auto n = vectors.front().size();
  CMatrix c(n * static_cast<Eigen::Index>(vectors.size()), n * n);
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].size() != n) throw DimensionError("eigenvector constraints: vectors differ in dimension");
    c.middleRows(static_cast<Eigen::Index>(k) * n, n) = eigenvector_constraint_block(vectors[k]);
  }
  return c;
}

/// Dimension of the space of operators E with E eta parallel to eta for every
/// given vector. With SpanCheck::kRequire the vectors must span the space.
inline CommutantReport eigenvector_constraint_dim(std::span<const CVector> vectors, double tol = kDefaultTol,
                                                  SpanCheck span = SpanCheck::kRequire) {
  if (vectors.empty()) throw std::invalid_argument("eigenvector_constraint_dim: no vectors");
  const auto n = vectors.front().size();
  if (span == SpanCheck::kRequire) {
    CMatrix stacked(n, static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t k = 0; k < vectors.size(); ++k) stacked.col(static_cast<Eigen::Index>(k)) = vectors[k];
    const auto r = rank(stacked, tol);
    if (r != static_cast<std::size_t>(n)) {
      throw SpanningError("safe vectors span a " + std::to_string(r) + "-dimensional subspace of " +
                          std::to_string(n) + " dimensions");
    }
  }
  const auto ns = nullspace(eigenvector_constraint_matrix(vectors), tol);
  CommutantReport rep;
  rep.space_dim = static_cast<std::size_t>(n);
  rep.dim = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  rep.constraint_rank = ns.rank;
  rep.solution_dim = ns.dimension;
  rep.tol = tol;
  if (!ns.basis.empty()) {
    // Pick the nullspace direction with the largest trace so the identity
    // component is visible when it is present.
    std::size_t best = 0;
    double best_tr = -1.0;
    for (std::size_t k = 0; k < ns.basis.size(); ++k) {
      const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
          ns.basis[k].data(), n, n);
      const double tr = std::abs(w.trace());
      if (tr > best_tr) {
        best_tr = tr;
        best = k;
      }
    }
    const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
        ns.basis[best].data(), n, n);
    rep.witness = w;
    const Complex mean = rep.witness.trace() / static_cast<double>(n);
    rep.identity_residual =
        (rep.witness - mean * CMatrix::Identity(n, n)).norm() / rep.witness.norm();
  }
  return rep;
}

inline CommutantReport eigenvector_constraint_dim(const std::vector<SafeVector>& safe_vectors,
                                                  double tol = kDefaultTol, SpanCheck span = SpanCheck::kRequire) {
  std::vector<CVector> etas;
  etas.reserve(safe_vectors.size());
  for (const auto& sv : safe_vectors) etas.push_back(sv.eta);
  return eigenvector_constraint_dim(std::span<const CVector>(etas), tol, span);
}

/// Operator space budget for the n-block check: d^(2n) <= 64.
inline constexpr std::size_t kLemmaMaxSpaceDim = 64;

/// The commutant check over all safe product vectors of the n-fold strategy.
inline CommutantReport lemma2_check(const Strategy& strategy, std::size_t n, double tol = kDefaultTol) {
  if (n < 1) throw std::invalid_argument("lemma2_check: n must be at least 1");
  if (ipow(strategy.dim(), 2 * n) > kLemmaMaxSpaceDim) {
    throw ResourceLimitError("lemma2_check: d^(2n) = " + std::to_string(ipow(strategy.dim(), 2 * n)) +
                             " exceeds " + std::to_string(kLemmaMaxSpaceDim));
  }
  const ProductStrategy ps(strategy, n);
  std::vector<CVector> etas;
  etas.reserve(ps.size());
  for (std::size_t x = 0; x < ps.size(); ++x) etas.push_back(ps.vector(x));
  auto rep = eigenvector_constraint_dim(std::span<const CVector>(etas), tol);
  rep.dim = strategy.dim();
  rep.n = n;
  return rep;
}

}  // namespace meanking
