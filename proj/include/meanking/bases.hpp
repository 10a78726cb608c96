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

// Basis sets for the retrodiction game: construction of complete sets of
// mutually unbiased bases in prime dimension, and validation of arbitrary
// supplied sets (orthonormality, unbiasedness, non-degeneracy, and the
// existence of a classical joint model for the pairwise statistics).
//
// Basis and outcome labels are 0-based throughout the library.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meanking/lp.hpp"
#include "meanking/qmath.hpp"

namespace meanking {

class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One orthonormal basis; column i of `vectors` is the i-th basis vector.
struct Basis {
  std::size_t label = 0;
  CMatrix vectors;

  std::size_t dim() const { return static_cast<std::size_t>(vectors.rows()); }
  CVector vector(std::size_t i) const { return vectors.col(static_cast<Eigen::Index>(i)); }
};

class BasisSet {
 public:
  BasisSet() = default;

  /// Takes square d x d matrices whose columns are the basis vectors.
  BasisSet(std::size_t dim, const std::vector<CMatrix>& bases) : dim_(dim) {
    if (dim == 0) throw DimensionError("BasisSet: dimension must be positive");
    if (bases.empty()) throw DimensionError("BasisSet: at least one basis is required");
    const auto d = static_cast<Eigen::Index>(dim);
    for (std::size_t b = 0; b < bases.size(); ++b) {
      if (bases[b].rows() != d || bases[b].cols() != d) {
        throw DimensionError("BasisSet: basis " + std::to_string(b) + " is not " +
                             std::to_string(dim) + "x" + std::to_string(dim));
      }
      bases_.push_back(Basis{b, bases[b]});
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return bases_.size(); }
  const Basis& basis(std::size_t b) const { return bases_.at(b); }
  const std::vector<Basis>& bases() const { return bases_; }

  CVector vector(std::size_t b, std::size_t i) const {
    if (b >= count() || i >= dim_) throw std::out_of_range("BasisSet: index out of range");
    return bases_[b].vector(i);
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Basis> bases_;
};

inline bool is_prime(std::size_t n) {
  if (n < 2) return false;
  for (std::size_t k = 2; k * k <= n; ++k) {
    if (n % k == 0) return false;
  }
  return true;
}

/// The d+1 mutually unbiased bases for prime d <= 7: the computational basis,
/// followed by the Weyl-Heisenberg bases. For odd d basis a+1 has components
/// omega^(a s^2 + i s) / sqrt(d); for d = 2 the bases are the Z, X, Y eigenbases.
inline BasisSet gen_mub(std::size_t d) {
  if (!is_prime(d) || d > 7) {
    throw UnsupportedDimension("unsupported dimension " + std::to_string(d) +
                               ": generation requires a prime d <= 7");
  }
  const auto n = static_cast<Eigen::Index>(d);
  std::vector<CMatrix> bases;
  bases.push_back(CMatrix::Identity(n, n));
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  if (d == 2) {
    const Complex I(0.0, 1.0);
    CMatrix x(2, 2), y(2, 2);
    x << inv, inv, inv, -inv;
    y << inv, inv, I * inv, -I * inv;
    bases.push_back(x);
    bases.push_back(y);
    return BasisSet(d, bases);
  }
  for (std::size_t a = 0; a < d; ++a) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t s = 0; s < d; ++s) {
        const std::size_t phase = (a * s * s + i * s) % d;
        m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) =
            inv * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(phase) /
                                      static_cast<double>(d));
      }
    }
    bases.push_back(m);
  }
  return BasisSet(d, bases);
}

struct CheckResult {
  bool ok = false;
  double worst = 0.0;
};

/// ok iff every basis has max |G - 1| <= tol for its Gram matrix G.
inline CheckResult check_orthonormal(const BasisSet& bs, double tol = kDefaultTol) {
  const auto d = static_cast<Eigen::Index>(bs.dim());
  double worst = 0.0;
  for (const auto& basis : bs.bases()) {
    const CMatrix gram = basis.vectors.adjoint() * basis.vectors;
    worst = std::max(worst, max_abs_diff(gram, CMatrix::Identity(d, d)));
  }
  return {worst <= tol, worst};
}

/// ok iff every cross-basis squared overlap equals 1/d within tol.
inline CheckResult check_unbiased(const BasisSet& bs, double tol = kDefaultTol) {
  const double target = 1.0 / static_cast<double>(bs.dim());
  double worst = 0.0;
  for (std::size_t a = 0; a < bs.count(); ++a) {
    for (std::size_t b = a + 1; b < bs.count(); ++b) {
      const CMatrix overlap = bs.basis(a).vectors.adjoint() * bs.basis(b).vectors;
      worst = std::max(worst, (overlap.cwiseAbs2().array() - target).abs().maxCoeff());
    }
  }
  return {worst <= tol, worst};
}

/// Real coordinates of a hermitian d x d operator: the diagonal followed by
/// sqrt(2) Re and sqrt(2) Im of the strict upper triangle. This is an isometry
/// for the Hilbert-Schmidt inner product.
inline RVector hermitian_coordinates(const CMatrix& h) {
  const auto d = h.rows();
  RVector v(d * d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) v(k++) = h(i, i).real();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      v(k++) = std::sqrt(2.0) * h(i, j).real();
      v(k++) = std::sqrt(2.0) * h(i, j).imag();
    }
  }
  return v;
}

struct NondegeneracyCheck {
  bool ok = false;
  std::size_t rank = 0;
  std::size_t expected = 0;
};

/// Real-linear rank of the k*d rank-one projectors; ok iff it equals k(d-1)+1.
inline NondegeneracyCheck check_nondegenerate(const BasisSet& bs, double tol = kDefaultTol) {
  const std::size_t d = bs.dim();
  const std::size_t k = bs.count();
  RMatrix coords(static_cast<Eigen::Index>(k * d), static_cast<Eigen::Index>(d * d));
  for (std::size_t b = 0; b < k; ++b) {
    for (std::size_t i = 0; i < d; ++i) {
      coords.row(static_cast<Eigen::Index>(b * d + i)) =
          hermitian_coordinates(projector(bs.vector(b, i))).transpose();
    }
  }
  NondegeneracyCheck out;
  out.rank = rank(coords, tol);
  out.expected = k * (d - 1) + 1;
  out.ok = out.rank == out.expected;
  return out;
}

/// Joint distribution of basis b's outcome i (row) and basis a's outcome j
/// (column): (1/d) |<Phi_b(i)|Phi_a(j)>|^2.
inline RMatrix pairwise_joint(const BasisSet& bs, std::size_t a, std::size_t b) {
  if (a >= bs.count() || b >= bs.count()) throw std::out_of_range("pairwise_joint: basis index out of range");
  if (a == b) throw std::invalid_argument("pairwise_joint: requires two distinct bases");
  const CMatrix overlap = bs.basis(b).vectors.adjoint() * bs.basis(a).vectors;
  return overlap.cwiseAbs2() / static_cast<double>(bs.dim());
}

/// Variable budget for the classical-model LP (d^k joint outcomes).
inline constexpr std::size_t kClassicalModelMaxVariables = 20000;

struct ClassicalModelCheck {
  bool ok = false;
  /// Joint distribution q(j_0, ..., j_{k-1}), j_0 the slowest index.
  std::optional<RVector> model;
  /// Largest deviation of the model's marginals from the target statistics.
  double marginal_residual = 0.0;
};

namespace detail {

// Marginal constraint rows: every single-variable marginal is 1/d, every
// pairwise marginal (a < b) equals pairwise_joint(a, b), and the mass is 1.
// Single-variable rows are implied by the pairwise ones when k >= 2 but pin
// the k = 1 case to the uniform model.
inline void classical_model_system(const BasisSet& bs, RMatrix& a_eq, RVector& b_eq) {
  const std::size_t d = bs.dim();
  const std::size_t k = bs.count();
  const std::size_t nvars = ipow(d, k);
  const std::size_t nrows = 1 + k * d + (k * (k - 1) / 2) * d * d;
  a_eq = RMatrix::Zero(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(nvars));
  b_eq = RVector::Zero(static_cast<Eigen::Index>(nrows));

  std::vector<std::size_t> stride(k, 1);
  for (std::size_t f = k; f-- > 1;) stride[f - 1] = stride[f] * d;
  auto digit = [&](std::size_t var, std::size_t f) { return (var / stride[f]) % d; };

  Eigen::Index row = 0;
  a_eq.row(row).setOnes();
  b_eq(row++) = 1.0;
  const Eigen::Index single0 = row;
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t j = 0; j < d; ++j) b_eq(single0 + static_cast<Eigen::Index>(f * d + j)) = 1.0 / static_cast<double>(d);
  }
  row += static_cast<Eigen::Index>(k * d);
  const Eigen::Index pair0 = row;
  std::vector<RMatrix> joints;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) joints.push_back(pairwise_joint(bs, a, b));
  }
  for (std::size_t var = 0; var < nvars; ++var) {
    const auto col = static_cast<Eigen::Index>(var);
    for (std::size_t f = 0; f < k; ++f) {
      a_eq(single0 + static_cast<Eigen::Index>(f * d + digit(var, f)), col) = 1.0;
    }
    std::size_t pair = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b, ++pair) {
        // Row (i, j) of pairwise_joint(a, b) is outcome i of b and j of a.
        const std::size_t i = digit(var, b);
        const std::size_t j = digit(var, a);
        a_eq(pair0 + static_cast<Eigen::Index>(pair * d * d + i * d + j), col) = 1.0;
      }
    }
  }
  std::size_t pair = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b, ++pair) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          b_eq(pair0 + static_cast<Eigen::Index>(pair * d * d + i * d + j)) =
              joints[pair](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
      }
    }
  }
}

}  // namespace detail

/// Searches for a joint distribution over k d-valued variables whose pairwise
/// marginals reproduce the pairwise overlap statistics of the basis set.
inline ClassicalModelCheck check_classical_model(const BasisSet& bs, double tol = kDefaultTol) {
  const std::size_t nvars = ipow(bs.dim(), bs.count());
  if (nvars > kClassicalModelMaxVariables) {
    throw ResourceLimitError("check_classical_model: " + std::to_string(bs.dim()) + "^" +
                             std::to_string(bs.count()) + " joint outcomes exceed the LP budget");
  }
  RMatrix a_eq;
  RVector b_eq;
  detail::classical_model_system(bs, a_eq, b_eq);
  LinearProgram lp{a_eq, b_eq, RVector::Zero(a_eq.cols()), {}};
  const LpResult res = lp_feasible(lp, tol);
  ClassicalModelCheck out;
  out.ok = res.feasible;
  if (res.feasible) {
    out.marginal_residual = (a_eq * *res.point - b_eq).cwiseAbs().maxCoeff();
    out.model = *res.point;
  }
  return out;
}

struct ValidationReport {
  bool orthonormal = false;
  bool unbiased = false;
  bool nondegenerate = false;
  std::size_t span_rank = 0;
  /// Empty when the LP exceeds its variable budget and was skipped.
  std::optional<bool> classical_model;
  double worst_violation = 0.0;
  double unbiased_worst = 0.0;

  /// Conditions for a successful retrodiction strategy. Unbiasedness is
  /// reported but not required.
  bool passed() const { return orthonormal && nondegenerate && classical_model.value_or(true); }
};

inline ValidationReport validate(const BasisSet& bs, double tol = kDefaultTol) {
  ValidationReport rep;
  const auto ortho = check_orthonormal(bs, tol);
  rep.orthonormal = ortho.ok;
  rep.worst_violation = ortho.worst;
  const auto unb = check_unbiased(bs, tol);
  rep.unbiased = unb.ok;
  rep.unbiased_worst = unb.worst;
  const auto nd = check_nondegenerate(bs, tol);
  rep.nondegenerate = nd.ok;
  rep.span_rank = nd.rank;
  if (ipow(bs.dim(), bs.count()) <= kClassicalModelMaxVariables) {
    const auto cm = check_classical_model(bs, tol);
    rep.classical_model = cm.ok;
    if (cm.ok) rep.worst_violation = std::max(rep.worst_violation, cm.marginal_residual);
  }
  return rep;
}

}  // namespace meanking
