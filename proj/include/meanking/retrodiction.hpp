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

// Alice's side of the Mean King game.
//
// Alice keeps the first factor of the maximally entangled state Omega and
// sends the second to Bob, who measures it in basis b, obtains i and returns
// the eigenstate. Alice then holds phi_hat(b, i) = (1 x |Phi_b(i)><Phi_b(i)|) Omega.
// A safe vector eta_x for the guessing function x satisfies
//
//     <eta_x | phi_hat(b, i)> = [x(b) == i]   for every b, i,
//
// and a strategy is a POVM {p(x) |eta_x><eta_x|} summing to the identity.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meanking/bases.hpp"
#include "meanking/lp.hpp"
#include "meanking/qmath.hpp"

namespace meanking {

/// Assignment of one outcome per basis, values[b] in [0, d).
struct GuessingFunction {
  std::vector<std::size_t> values;

  std::size_t operator()(std::size_t b) const { return values.at(b); }
  std::size_t size() const { return values.size(); }
  friend bool operator==(const GuessingFunction&, const GuessingFunction&) = default;
};

/// Number of guessing functions for k bases of dimension d: d^k.
inline std::size_t guessing_function_count(std::size_t d, std::size_t k) { return ipow(d, k); }

/// Mixed-radix decoding; values[0] is the most significant digit.
inline GuessingFunction guessing_function_from_index(std::size_t index, std::size_t d, std::size_t k) {
  GuessingFunction x{std::vector<std::size_t>(k)};
  for (std::size_t b = k; b-- > 0;) {
    x.values[b] = index % d;
    index /= d;
  }
  return x;
}

inline std::size_t guessing_function_index(const GuessingFunction& x, std::size_t d) {
  std::size_t index = 0;
  for (auto v : x.values) {
    if (v >= d) throw std::out_of_range("guessing function value out of range");
    index = index * d + v;
  }
  return index;
}

inline std::vector<GuessingFunction> all_guessing_functions(std::size_t d, std::size_t k) {
  std::vector<GuessingFunction> out;
  const std::size_t count = guessing_function_count(d, k);
  out.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) out.push_back(guessing_function_from_index(idx, d, k));
  return out;
}

/// (1/sqrt(d)) sum_i |i>|i>.
inline CVector omega(std::size_t d) {
  if (d < 1) throw DimensionError("omega: dimension must be positive");
  const auto n = static_cast<Eigen::Index>(d);
  CVector v = CVector::Zero(n * n);
  const double amp = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < n; ++i) v(i * n + i) = amp;
  return v;
}

/// (1 x |phi><phi|) Omega for an arbitrary vector phi on the second factor.
inline CVector project_second_factor(const CVector& phi) {
  const auto n = phi.size();
  const CVector om = omega(static_cast<std::size_t>(n));
  CVector out = CVector::Zero(n * n);
  // (1 x P) Omega = (1/sqrt(n)) sum_a |a> P|a>, and P|a> = phi conj(phi_a).
  for (Eigen::Index a = 0; a < n; ++a) {
    out.segment(a * n, n) = om(a * n + a) * std::conj(phi(a)) * phi;
  }
  return out;
}

/// Alice's unnormalised conditional state; squared norm 1/d.
inline CVector phi_hat(const BasisSet& bs, std::size_t b, std::size_t i) {
  return project_second_factor(bs.vector(b, i));
}

class ResidualTooLarge : public std::runtime_error {
 public:
  ResidualTooLarge(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NotMaximal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SafeVector {
  GuessingFunction x;
  CVector eta;
  double residual = 0.0;
};

inline constexpr double kSafeVectorResidualTol = 1e-8;

/// Rows are phi_hat(b, i)^dagger in (b, i) order, so row . eta = <phi_hat|eta>.
inline CMatrix safe_vector_system(const BasisSet& bs) {
  const std::size_t d = bs.dim();
  const std::size_t k = bs.count();
  CMatrix a(static_cast<Eigen::Index>(k * d), static_cast<Eigen::Index>(d * d));
  for (std::size_t b = 0; b < k; ++b) {
    for (std::size_t i = 0; i < d; ++i) {
      a.row(static_cast<Eigen::Index>(b * d + i)) = phi_hat(bs, b, i).adjoint();
    }
  }
  return a;
}

inline CVector safe_vector_rhs(const GuessingFunction& x, std::size_t d) {
  CVector rhs = CVector::Zero(static_cast<Eigen::Index>(x.size() * d));
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (x(b) >= d) throw std::out_of_range("guessing function value out of range");
    rhs(static_cast<Eigen::Index>(b * d + x(b))) = 1.0;
  }
  return rhs;
}

namespace detail {

inline void check_guess(const BasisSet& bs, const GuessingFunction& x) {
  if (x.size() != bs.count()) {
    throw DimensionError("guessing function has " + std::to_string(x.size()) + " entries for " +
                         std::to_string(bs.count()) + " bases");
  }
}

inline SafeVector finish_safe_vector(const CMatrix& a, const GuessingFunction& x, CVector eta,
                                     std::size_t d, double residual_tol) {
  const CVector rhs = safe_vector_rhs(x, d);
  const double residual = (a * eta - rhs).norm();
  if (!(residual < residual_tol)) {
    std::string label;
    for (auto v : x.values) label += std::to_string(v + 1);
    throw ResidualTooLarge("no safe vector for guessing function (" + label + "): residual " +
                               std::to_string(residual),
                           residual);
  }
  return SafeVector{x, std::move(eta), residual};
}

}  // namespace detail

/// Minimum-norm least-squares safe vector for x. Throws ResidualTooLarge when
/// the system is inconsistent.
inline SafeVector solve_safe_vector(const BasisSet& bs, const GuessingFunction& x,
                                    double residual_tol = kSafeVectorResidualTol) {
  detail::check_guess(bs, x);
  const CMatrix a = safe_vector_system(bs);
  auto sol = lstsq(a, safe_vector_rhs(x, bs.dim()));
  return detail::finish_safe_vector(a, x, std::move(sol.x), bs.dim(), residual_tol);
}

/// Safe vectors for every guessing function, indexed by guessing_function_index.
inline std::vector<SafeVector> solve_all_safe_vectors(const BasisSet& bs,
                                                      double residual_tol = kSafeVectorResidualTol) {
  const CMatrix a = safe_vector_system(bs);
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  std::vector<SafeVector> out;
  for (auto& x : all_guessing_functions(bs.dim(), bs.count())) {
    CVector eta = svd.solve(safe_vector_rhs(x, bs.dim()));
    out.push_back(detail::finish_safe_vector(a, x, std::move(eta), bs.dim(), residual_tol));
  }
  return out;
}

struct DecompositionTriple {
  GuessingFunction u;
  GuessingFunction v;
  GuessingFunction w;
};

/// Guessing functions u, v, w with eta_x = eta_u + eta_v - eta_w: u and w
/// take j1 at basis b1, v and w take j2 at basis b2, all else follows x.
inline DecompositionTriple decomposition_triple(const GuessingFunction& x, std::size_t b1,
                                                std::size_t b2, std::size_t j1, std::size_t j2) {
  if (b1 >= x.size() || b2 >= x.size()) throw std::out_of_range("decomposition_triple: basis index out of range");
  if (b1 == b2) throw std::invalid_argument("decomposition_triple: the two bases must differ");
  if (j1 == x(b1) || j2 == x(b2)) {
    throw std::invalid_argument("decomposition_triple: replacement outcomes must differ from x");
  }
  DecompositionTriple t{x, x, x};
  t.u.values[b1] = j1;
  t.w.values[b1] = j1;
  t.v.values[b2] = j2;
  t.w.values[b2] = j2;
  return t;
}

namespace detail {

// Real equations for sum_x p(x) |eta_x><eta_x| = 1 on the upper triangle:
// real diagonal, then Re and Im of each strictly-upper entry.
inline void povm_system(const std::vector<SafeVector>& svs, RMatrix& a_eq, RVector& b_eq) {
  const auto n = svs.front().eta.size();
  const Eigen::Index rows = n * n;
  a_eq.resize(rows, static_cast<Eigen::Index>(svs.size()));
  b_eq = RVector::Zero(rows);
  for (Eigen::Index i = 0; i < n; ++i) b_eq(i) = 1.0;
  for (std::size_t x = 0; x < svs.size(); ++x) {
    const CVector& eta = svs[x].eta;
    if (eta.size() != n) throw DimensionError("solve_povm_weights: safe vectors differ in dimension");
    const auto col = static_cast<Eigen::Index>(x);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) a_eq(r++, col) = std::norm(eta(i));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Complex e = eta(i) * std::conj(eta(j));
        a_eq(r++, col) = e.real();
        a_eq(r++, col) = e.imag();
      }
    }
  }
}

}  // namespace detail

inline constexpr double kMaximalWeightFloor = 1e-9;

/// POVM weights p(x) >= 0 with sum_x p(x) eta_x eta_x^dagger = 1, maximising
/// min_x p(x). Throws Infeasible or NotMaximal (some weight forced to 0).
inline RVector solve_povm_weights(const std::vector<SafeVector>& safe_vectors, double tol = kDefaultTol) {
  if (safe_vectors.empty()) throw std::invalid_argument("solve_povm_weights: no safe vectors");
  RMatrix a_eq;
  RVector b_eq;
  detail::povm_system(safe_vectors, a_eq, b_eq);
  std::vector<std::size_t> all(safe_vectors.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  LinearProgram lp{a_eq, b_eq, RVector::Zero(a_eq.cols()), all};
  const LpResult res = lp_feasible(lp, tol);
  if (!res.feasible) throw Infeasible("no nonnegative POVM weights reproduce the identity");
  if (!(res.maximin_value > kMaximalWeightFloor)) {
    throw NotMaximal("completeness forces some POVM weight to zero (max-min weight " +
                     std::to_string(res.maximin_value) + ")");
  }
  return *res.point;
}

/// Alice's maximal strategy: safe vectors for every guessing function plus weights.
struct Strategy {
  BasisSet basis_set;
  CVector omega;
  std::vector<SafeVector> safe_vectors;
  RVector weights;

  std::size_t dim() const { return basis_set.dim(); }
  std::size_t basis_count() const { return basis_set.count(); }
  std::size_t size() const { return safe_vectors.size(); }
  bool maximal() const { return weights.size() > 0 && weights.minCoeff() > 0.0; }
};

inline CMatrix povm_sum(const Strategy& s) {
  const auto n = static_cast<Eigen::Index>(s.dim() * s.dim());
  CMatrix sum = CMatrix::Zero(n, n);
  for (std::size_t x = 0; x < s.size(); ++x) {
    sum += s.weights(static_cast<Eigen::Index>(x)) * projector(s.safe_vectors[x].eta);
  }
  return sum;
}

/// max |sum_x p(x) eta_x eta_x^dagger - 1|.
inline double completeness_residual(const Strategy& s) {
  const auto n = static_cast<Eigen::Index>(s.dim() * s.dim());
  return max_abs_diff(povm_sum(s), CMatrix::Identity(n, n));
}

inline Strategy build_strategy(const BasisSet& bs, double tol = kDefaultTol) {
  Strategy s{bs, omega(bs.dim()), solve_all_safe_vectors(bs), {}};
  s.weights = solve_povm_weights(s.safe_vectors, tol);
  return s;
}

/// sum_{x : x(b) = i} p(x) |eta_x><eta_x|: the POVM element for "Alice's
/// guess for basis b is i".
inline CMatrix guess_operator(const Strategy& s, std::size_t b, std::size_t i) {
  const auto n = static_cast<Eigen::Index>(s.dim() * s.dim());
  CMatrix g = CMatrix::Zero(n, n);
  for (std::size_t x = 0; x < s.size(); ++x) {
    if (s.safe_vectors[x].x(b) == i) {
      g += s.weights(static_cast<Eigen::Index>(x)) * projector(s.safe_vectors[x].eta);
    }
  }
  return g;
}

/// Guard on the block Hilbert space dimension d^(2n).
inline constexpr std::size_t kMaxBlockStateDim = 4096;

/// Position in (A1..An)(B1..Bn) order of flat index `idx` on
/// (A1 B1)(A2 B2)...(An Bn), each factor of dimension d.
inline std::size_t block_order_index(std::size_t idx, std::size_t d, std::size_t n) {
  std::size_t a = 0, b = 0, place = 1;
  for (std::size_t l = n; l-- > 0;) {
    const std::size_t bl = idx % d;
    idx /= d;
    const std::size_t al = idx % d;
    idx /= d;
    a += al * place;
    b += bl * place;
    place *= d;
  }
  return a * place + b;
}

inline CVector to_block_order(const CVector& interleaved, std::size_t d, std::size_t n) {
  const std::size_t blk = ipow(d, n);
  if (static_cast<std::size_t>(interleaved.size()) != blk * blk) {
    throw DimensionError("to_block_order: vector dimension does not match (d^2)^n");
  }
  CVector out(interleaved.size());
  for (std::size_t idx = 0; idx < blk * blk; ++idx) {
    out(static_cast<Eigen::Index>(block_order_index(idx, d, n))) = interleaved(static_cast<Eigen::Index>(idx));
  }
  return out;
}

/// Tensor product of n copies of the basis set: basis tuple bvec selects the
/// product basis, outcome tuple ivec its vector.
inline CVector product_basis_vector(const BasisSet& bs, std::span<const std::size_t> bvec,
                                    std::span<const std::size_t> ivec) {
  if (bvec.size() != ivec.size() || bvec.empty()) throw DimensionError("product_basis_vector: tuple length mismatch");
  CVector v = bs.vector(bvec[0], ivec[0]);
  for (std::size_t l = 1; l < bvec.size(); ++l) v = tensor(v, bs.vector(bvec[l], ivec[l]));
  return v;
}

/// Alice's conditional state for a block: (1 x |Phi_b(i)><Phi_b(i)|) Omega_{d^n}
/// on (A1..An)(B1..Bn).
inline CVector phi_hat_product(const BasisSet& bs, std::span<const std::size_t> bvec,
                               std::span<const std::size_t> ivec) {
  return project_second_factor(product_basis_vector(bs, bvec, ivec));
}

/// n-fold execution of a single-round strategy. Product safe vectors and
/// weights are built on demand; nothing of size |X|^n is stored.
class ProductStrategy {
 public:
  ProductStrategy(const Strategy& base, std::size_t n) : base_(&base), n_(n) {
    if (n < 1) throw std::invalid_argument("tensor_strategy: n must be at least 1");
    if (ipow(base.dim(), 2 * n) > kMaxBlockStateDim) {
      throw ResourceLimitError("tensor_strategy: d^(2n) = " + std::to_string(base.dim()) + "^" +
                               std::to_string(2 * n) + " exceeds " + std::to_string(kMaxBlockStateDim));
    }
  }

  const Strategy& base() const { return *base_; }
  std::size_t n() const { return n_; }
  std::size_t dim() const { return base_->dim(); }
  std::size_t block_dim() const { return ipow(dim(), n_); }
  std::size_t size() const { return ipow(base_->size(), n_); }

  /// Per-round guessing-function indices of product index `index` (round 0 slowest).
  std::vector<std::size_t> components(std::size_t index) const {
    std::vector<std::size_t> xs(n_);
    for (std::size_t l = n_; l-- > 0;) {
      xs[l] = index % base_->size();
      index /= base_->size();
    }
    return xs;
  }

  std::size_t index_of(std::span<const std::size_t> xs) const {
    std::size_t index = 0;
    for (auto x : xs) index = index * base_->size() + x;
    return index;
  }

  std::vector<GuessingFunction> guessing_functions(std::size_t index) const {
    std::vector<GuessingFunction> out;
    for (auto x : components(index)) out.push_back(base_->safe_vectors[x].x);
    return out;
  }

  double weight(std::size_t index) const {
    double w = 1.0;
    for (auto x : components(index)) w *= base_->weights(static_cast<Eigen::Index>(x));
    return w;
  }

  /// Product safe vector in (A1..An)(B1..Bn) order.
  CVector vector(std::size_t index) const {
    const auto xs = components(index);
    CVector v = base_->safe_vectors[xs[0]].eta;
    for (std::size_t l = 1; l < n_; ++l) v = tensor(v, base_->safe_vectors[xs[l]].eta);
    return n_ == 1 ? v : to_block_order(v, dim(), n_);
  }

  /// Product of the per-round guess operators, on (A1..An)(B1..Bn).
  CMatrix guess_operator(std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) const {
    if (bvec.size() != n_ || ivec.size() != n_) throw DimensionError("guess_operator: tuple length mismatch");
    CMatrix g = meanking::guess_operator(*base_, bvec[0], ivec[0]);
    for (std::size_t l = 1; l < n_; ++l) g = tensor(g, meanking::guess_operator(*base_, bvec[l], ivec[l]));
    return n_ == 1 ? g : reorder_operator(g);
  }

  /// True iff every round's guess x_l(b_l) equals i_l.
  bool correct(std::size_t index, std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) const {
    const auto xs = components(index);
    for (std::size_t l = 0; l < n_; ++l) {
      if (base_->safe_vectors[xs[l]].x(bvec[l]) != ivec[l]) return false;
    }
    return true;
  }

 private:
  CMatrix reorder_operator(const CMatrix& g) const {
    const auto dim2 = static_cast<std::size_t>(g.rows());
    std::vector<Eigen::Index> perm(dim2);
    for (std::size_t k = 0; k < dim2; ++k) perm[k] = static_cast<Eigen::Index>(block_order_index(k, dim(), n_));
    CMatrix out(g.rows(), g.cols());
    for (std::size_t r = 0; r < dim2; ++r) {
      for (std::size_t c = 0; c < dim2; ++c) {
        out(perm[r], perm[c]) = g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
    return out;
  }

  const Strategy* base_;
  std::size_t n_;
};

/// The strategy must outlive the returned view.
inline ProductStrategy tensor_strategy(const Strategy& s, std::size_t n) { return ProductStrategy(s, n); }

}  // namespace meanking
