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

// Small dense linear programs of the form
//
//     A_eq p = b_eq,   p >= lower,
//
// optionally maximising t = min_{j in S} (p_j - lower_j) over a designated
// subset S. Solved with a two-phase tableau simplex. Sizes here are at most a
// few hundred rows and ~1.6e4 columns, so everything is dense.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "meanking/qmath.hpp"

namespace meanking {

struct LinearProgram {
  RMatrix a_eq;
  RVector b_eq;
  RVector lower_bounds;
  /// Variables whose minimum slack above the lower bound is maximised. Empty
  /// means pure feasibility.
  std::vector<std::size_t> maximin;
};

struct LpResult {
  bool feasible = false;
  std::optional<RVector> point;
  /// Optimal min_{j in S} (p_j - lower_j); +inf when unbounded, 0 when S is empty.
  double maximin_value = 0.0;
  /// max |A_eq p - b_eq| of the returned point.
  double equality_residual = 0.0;
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  // Rows 0..m-1 are constraints, row m is the reduced-cost row. The last
  // column is the right-hand side.
  Tableau(const RMatrix& a, const RVector& b)
      : m_(a.rows()), n_(a.cols()), t_(a.rows() + 1, a.cols() + a.rows() + 1) {
    t_.setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs_col()) = sign * b(i);
    }
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    allowed_.assign(static_cast<std::size_t>(n_ + m_), true);
  }

  Eigen::Index rows() const { return m_; }
  Eigen::Index structural() const { return n_; }
  Eigen::Index rhs_col() const { return n_ + m_; }
  bool is_artificial(Eigen::Index col) const { return col >= n_; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  std::size_t pivots() const { return pivots_; }

  // Installs cost vector c (length n + m) as the objective to minimise.
  void set_objective(const RVector& c) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_ + m_) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = c(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  double objective_value() const { return -t_(m_, rhs_col()); }

  void forbid_artificials() {
    for (Eigen::Index j = n_; j < n_ + m_; ++j) allowed_[static_cast<std::size_t>(j)] = false;
  }

  enum class Status { kOptimal, kUnbounded, kIterationLimit };

  Status optimise(double eps) {
    const std::size_t limit = 100 * static_cast<std::size_t>(n_ + m_) + 1000;
    std::size_t degenerate_run = 0;
    for (std::size_t it = 0; it < limit; ++it) {
      // Dantzig pricing, falling back to Bland's rule on long degenerate runs.
      const bool bland = degenerate_run > 50;
      Eigen::Index enter = -1;
      double best = -eps;
      for (Eigen::Index j = 0; j < n_ + m_; ++j) {
        if (!allowed_[static_cast<std::size_t>(j)]) continue;
        const double dj = t_(m_, j);
        if (dj < best) {
          enter = j;
          best = dj;
          if (bland) break;
        }
      }
      if (enter < 0) return Status::kOptimal;

      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double aij = t_(i, enter);
        if (aij <= eps) continue;
        const double r = t_(i, rhs_col()) / aij;
        if (r < ratio - 1e-12 ||
            (r <= ratio + 1e-12 && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          ratio = std::min(r, ratio);
          leave = i;
        }
      }
      if (leave < 0) return Status::kUnbounded;
      degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    return Status::kIterationLimit;
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    const Eigen::RowVectorXd prow = t_.row(r);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      const double f = t_(i, c);
      if (i != r && f != 0.0) t_.row(i) -= f * prow;
    }
    basis_[static_cast<std::size_t>(r)] = c;
    ++pivots_;
  }

  // Pivots zero-level artificials out of the basis where possible. Rows that
  // cannot be cleared are linearly dependent and are left inert.
  void expel_artificials(double eps) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      Eigen::Index best = -1;
      double best_abs = eps;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > best_abs) {
          best = j;
          best_abs = std::abs(t_(i, j));
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  RVector solution() const {
    RVector z = RVector::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const auto col = basis_[static_cast<std::size_t>(i)];
      if (col < n_) z(col) = t_(i, rhs_col());
    }
    return z;
  }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t_;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> allowed_;
  std::size_t pivots_ = 0;
};

// Indices of a maximal linearly independent subset of the rows of a, chosen
// by a pivoted QR of the Gram matrix A A^T (cheap when A is wide). The
// threshold applies to the Gram matrix, so it is the square of a singular
// value ratio.
inline std::vector<Eigen::Index> independent_rows(const RMatrix& a, double tol) {
  if (a.rows() == 0) return {};
  RMatrix gram(a.rows(), a.rows());
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
  gram = gram.selfadjointView<Eigen::Lower>();
  Eigen::ColPivHouseholderQR<RMatrix> qr(gram);
  qr.setThreshold(tol);
  const auto r = qr.rank();
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(r));
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < r; ++k) rows.push_back(perm(k));
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace detail

/// Finds a point of {A_eq p = b_eq, p >= lower}; infeasibility is a result,
/// not an error. With a non-empty maximin set the returned point maximises
/// min_{j in S} (p_j - lower_j).
inline LpResult lp_feasible(const LinearProgram& lp, double tol = kDefaultTol) {
  const Eigen::Index n = lp.a_eq.cols();
  if (lp.b_eq.size() != lp.a_eq.rows() || lp.lower_bounds.size() != n) {
    throw DimensionError("lp_feasible: inconsistent shapes");
  }
  for (auto j : lp.maximin) {
    if (j >= static_cast<std::size_t>(n)) throw DimensionError("lp_feasible: maximin index out of range");
  }

  LpResult out;
  // Shift to y = p - lower >= 0.
  const RVector rhs_full = lp.b_eq - lp.a_eq * lp.lower_bounds;
  const auto keep = detail::independent_rows(lp.a_eq, 1e-10);
  RMatrix a(static_cast<Eigen::Index>(keep.size()), n);
  RVector b(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    a.row(static_cast<Eigen::Index>(k)) = lp.a_eq.row(keep[k]);
    b(static_cast<Eigen::Index>(k)) = rhs_full(keep[k]);
  }

  // Maximin substitution: y_j = s_j + t for j in S, with t as the last column.
  const bool has_maximin = !lp.maximin.empty();
  RMatrix a_ext = a;
  if (has_maximin) {
    a_ext.conservativeResize(a.rows(), n + 1);
    a_ext.col(n).setZero();
    for (auto j : lp.maximin) a_ext.col(n) += a.col(static_cast<Eigen::Index>(j));
  }
  const Eigen::Index cols = a_ext.cols();
  const Eigen::Index m = a_ext.rows();

  auto recover = [&](const RVector& z) {
    RVector y = z.head(n);
    if (has_maximin) {
      for (auto j : lp.maximin) y(static_cast<Eigen::Index>(j)) += z(n);
    }
    return RVector(lp.lower_bounds + y);
  };
  auto finish = [&](RVector p, double maximin_value) {
    out.equality_residual =
        lp.a_eq.rows() ? (lp.a_eq * p - lp.b_eq).cwiseAbs().maxCoeff() : 0.0;
    const double scale = std::max(1.0, lp.b_eq.size() ? lp.b_eq.cwiseAbs().maxCoeff() : 0.0);
    bool ok = out.equality_residual <= tol * scale;
    for (Eigen::Index j = 0; j < n && ok; ++j) ok = p(j) >= lp.lower_bounds(j) - tol;
    out.feasible = ok;
    if (ok) {
      if (has_maximin && std::isfinite(maximin_value)) {
        maximin_value = std::numeric_limits<double>::infinity();
        for (auto j : lp.maximin) {
          const auto jj = static_cast<Eigen::Index>(j);
          maximin_value = std::min(maximin_value, p(jj) - lp.lower_bounds(jj));
        }
      }
      out.point = std::move(p);
      out.maximin_value = maximin_value;
    }
    return out;
  };

  if (m == 0) {
    RVector z = RVector::Zero(cols);
    return finish(recover(z), has_maximin ? std::numeric_limits<double>::infinity() : 0.0);
  }

  const double eps = 1e-11;
  detail::Tableau tab(a_ext, b);

  // Phase 1: minimise the sum of artificials.
  RVector c1 = RVector::Zero(cols + m);
  c1.tail(m).setOnes();
  tab.set_objective(c1);
  if (tab.optimise(eps) == detail::Tableau::Status::kIterationLimit) {
    throw std::runtime_error("lp_feasible: phase 1 iteration limit reached");
  }
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  out.pivots = tab.pivots();
  if (tab.objective_value() > 1e-8 * scale) return out;

  tab.expel_artificials(1e-9);
  tab.forbid_artificials();

  double maximin_value = 0.0;
  if (has_maximin) {
    RVector c2 = RVector::Zero(cols + m);
    c2(n) = -1.0;
    tab.set_objective(c2);
    const auto status = tab.optimise(eps);
    if (status == detail::Tableau::Status::kIterationLimit) {
      throw std::runtime_error("lp_feasible: phase 2 iteration limit reached");
    }
    maximin_value = status == detail::Tableau::Status::kUnbounded
                        ? std::numeric_limits<double>::infinity()
                        : -tab.objective_value();
  }
  out.pivots = tab.pivots();

  // Recompute the basic values from the original columns to shed pivot drift.
  RVector z = tab.solution();
  std::vector<Eigen::Index> basic;
  for (auto col : tab.basis()) {
    if (!tab.is_artificial(col)) basic.push_back(col);
  }
  if (!basic.empty()) {
    RMatrix bcols(m, static_cast<Eigen::Index>(basic.size()));
    for (std::size_t k = 0; k < basic.size(); ++k) bcols.col(static_cast<Eigen::Index>(k)) = a_ext.col(basic[k]);
    const RVector zb = bcols.colPivHouseholderQr().solve(b);
    if ((bcols * zb - b).cwiseAbs().maxCoeff() <= 1e-10 * scale) {
      for (std::size_t k = 0; k < basic.size(); ++k) {
        z(basic[k]) = std::max(0.0, zb(static_cast<Eigen::Index>(k)));
      }
    }
  }
  return finish(recover(z), maximin_value);
}

}  // namespace meanking
