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

// Dense complex linear-algebra kernels shared by the rest of the library.
//
// Vectors and matrices are plain Eigen dynamic types. Composite spaces use
// row-major (big-endian) index order: for a factorisation dims = {n0, n1, ...}
// the first factor is the slowest-varying index, matching kroneckerProduct.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace meanking {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Absolute tolerance used whenever a caller does not pass one.
inline constexpr double kDefaultTol = 1e-9;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a request would exceed the dense simulation budget.
class ResourceLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Subsystem dimensions of a composite space, slowest factor first.
struct CompositeDims {
  std::vector<std::size_t> factors;

  std::size_t total() const {
    return std::accumulate(factors.begin(), factors.end(), std::size_t{1},
                           std::multiplies<>());
  }
  std::size_t size() const { return factors.size(); }
};

/// Integer power with overflow saturation, used by resource guards.
inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < exp; ++k) {
    if (base != 0 && r > static_cast<std::size_t>(-1) / base) {
      return static_cast<std::size_t>(-1);
    }
    r *= base;
  }
  return r;
}

/// Kronecker product; the (i, j) index of `a` is the slow index.
inline CMatrix tensor(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CVector tensor(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

/// Standard basis vector e_k of the given dimension.
inline CVector basis_vector(std::size_t dim, std::size_t k) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(k)) = 1.0;
  return v;
}

inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

namespace detail {

inline void check_keep(const CompositeDims& dims, std::span<const std::size_t> keep) {
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= dims.size()) {
      throw DimensionError("partial_trace: factor index out of range");
    }
    if (k > 0 && keep[k] <= keep[k - 1]) {
      throw DimensionError("partial_trace: keep indices must be strictly increasing");
    }
  }
}

// Splits a composite index space into kept and traced parts and returns, for
// each (kept multi-index, traced multi-index) pair, the flat index in the full
// space: full = kept_offset[kept] + traced_offset[traced].
struct SplitIndex {
  std::vector<std::size_t> kept_offset;
  std::vector<std::size_t> traced_offset;
};

inline SplitIndex split_index(const CompositeDims& dims, std::span<const std::size_t> keep) {
  const std::size_t nf = dims.size();
  std::vector<std::size_t> stride(nf, 1);
  for (std::size_t f = nf; f-- > 1;) stride[f - 1] = stride[f] * dims.factors[f];
  std::vector<bool> is_kept(nf, false);
  for (auto k : keep) is_kept[k] = true;

  auto offsets = [&](bool kept) {
    std::vector<std::size_t> offs{0};
    for (std::size_t f = 0; f < nf; ++f) {
      if (is_kept[f] != kept) continue;
      std::vector<std::size_t> next;
      next.reserve(offs.size() * dims.factors[f]);
      for (auto o : offs) {
        for (std::size_t j = 0; j < dims.factors[f]; ++j) next.push_back(o + j * stride[f]);
      }
      offs = std::move(next);
    }
    return offs;
  };
  return {offsets(true), offsets(false)};
}

}  // namespace detail

/// Reduced operator on the factors listed in `keep` (strictly increasing).
inline CMatrix partial_trace(const CMatrix& rho, const CompositeDims& dims,
                             std::span<const std::size_t> keep) {
  const auto n = static_cast<Eigen::Index>(dims.total());
  if (rho.rows() != n || rho.cols() != n) {
    throw DimensionError("partial_trace: matrix dimension " + std::to_string(rho.rows()) + "x" +
                         std::to_string(rho.cols()) + " does not match composite dimension " +
                         std::to_string(n));
  }
  detail::check_keep(dims, keep);
  const auto split = detail::split_index(dims, keep);
  const auto m = static_cast<Eigen::Index>(split.kept_offset.size());
  CMatrix out = CMatrix::Zero(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      Complex acc = 0.0;
      for (auto t : split.traced_offset) {
        acc += rho(static_cast<Eigen::Index>(split.kept_offset[r] + t),
                   static_cast<Eigen::Index>(split.kept_offset[c] + t));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

inline CMatrix partial_trace(const CMatrix& rho, const CompositeDims& dims,
                             std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, dims, std::span<const std::size_t>(keep.begin(), keep.size()));
}

/// Reduced state of the pure state |psi><psi| without forming the full projector.
inline CMatrix partial_trace_pure(const CVector& psi, const CompositeDims& dims,
                                  std::span<const std::size_t> keep) {
  if (psi.size() != static_cast<Eigen::Index>(dims.total())) {
    throw DimensionError("partial_trace_pure: vector dimension does not match composite dimension");
  }
  detail::check_keep(dims, keep);
  const auto split = detail::split_index(dims, keep);
  const auto m = static_cast<Eigen::Index>(split.kept_offset.size());
  const auto t = static_cast<Eigen::Index>(split.traced_offset.size());
  CMatrix amp(m, t);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < t; ++c) {
      amp(r, c) = psi(static_cast<Eigen::Index>(split.kept_offset[r] + split.traced_offset[c]));
    }
  }
  return amp * amp.adjoint();
}

inline CMatrix partial_trace_pure(const CVector& psi, const CompositeDims& dims,
                                  std::initializer_list<std::size_t> keep) {
  return partial_trace_pure(psi, dims, std::span<const std::size_t>(keep.begin(), keep.size()));
}

struct NullspaceResult {
  std::size_t dimension = 0;
  std::size_t rank = 0;
  std::vector<CVector> basis;  // orthonormal
};

/// Right nullspace of `a`: singular values <= tol * sigma_max count as zero.
inline NullspaceResult nullspace(const CMatrix& a, double tol = kDefaultTol) {
  if (!(tol > 0.0)) throw std::invalid_argument("nullspace: tol must be positive");
  const auto cols = a.cols();
  NullspaceResult out;
  if (a.size() == 0) {
    out.dimension = static_cast<std::size_t>(cols);
    for (Eigen::Index k = 0; k < cols; ++k) out.basis.push_back(basis_vector(cols, k));
    return out;
  }
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  const double cutoff = tol * (sv.size() > 0 ? sv(0) : 0.0);
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff) ++rank;
  }
  out.rank = rank;
  out.dimension = static_cast<std::size_t>(cols) - rank;
  const CMatrix& v = svd.matrixV();
  for (Eigen::Index k = static_cast<Eigen::Index>(rank); k < cols; ++k) out.basis.push_back(v.col(k));
  return out;
}

/// Numerical rank with the same relative cutoff as nullspace().
inline std::size_t rank(const CMatrix& a, double tol = kDefaultTol) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<CMatrix> svd(a);
  const RVector& sv = svd.singularValues();
  const double cutoff = tol * sv(0);
  return static_cast<std::size_t>((sv.array() > cutoff).count());
}

inline std::size_t rank(const RMatrix& a, double tol = kDefaultTol) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<RMatrix> svd(a);
  const RVector& sv = svd.singularValues();
  const double cutoff = tol * sv(0);
  return static_cast<std::size_t>((sv.array() > cutoff).count());
}

struct LstsqResult {
  CVector x;
  double residual = 0.0;
};

/// Minimum-norm least-squares solution of a x = b.
inline LstsqResult lstsq(const CMatrix& a, const CVector& b) {
  if (a.rows() != b.size()) throw DimensionError("lstsq: A.rows must equal b.dim");
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  LstsqResult out;
  out.x = svd.solve(b);
  out.residual = (a * out.x - b).norm();
  return out;
}

/// Largest absolute entry of a - b.
inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: shape mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

/// Half the trace norm of rho - sigma, both hermitian.
inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    throw DimensionError("trace_distance: shape mismatch");
  }
  const CMatrix diff = 0.5 * ((rho - sigma) + (rho - sigma).adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double min_eigenvalue(const CMatrix& hermitian) {
  const CMatrix h = 0.5 * (hermitian + hermitian.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Inverse square root of a positive definite hermitian matrix.
inline CMatrix inverse_sqrt(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (hermitian + hermitian.adjoint()));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("inverse_sqrt: matrix is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace meanking
