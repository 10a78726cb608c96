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

// Coherent attacks on a block of n rounds.
//
// Eve supplies the tripartite source state psi on A x B x E (A and B are
// d^n-dimensional block systems, E is her d_E-dimensional memory) and applies
// a channel with Kraus operators V_l to the state Bob returns together with
// her memory. She keeps the Kraus index as a classical register, so her final
// system is E x L.
//
// Two independent routes to Alice's post-attack state are provided: applying
// the channel to the projected state directly, and the operator form
// rho_A = sum_{l,k} E_lk |phi_hat><phi_hat| E_lk^dagger, where the E_lk are
// assembled from the Weyl decomposition of the source and the Kraus entries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meanking/bases.hpp"
#include "meanking/qmath.hpp"
#include "meanking/retrodiction.hpp"

namespace meanking {

class AttackModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ZeroProbabilityOutcome : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Outcome probabilities below this are treated as impossible.
inline constexpr double kZeroProbability = 1e-14;

struct AttackModel {
  std::string name;
  std::size_t d = 2;
  std::size_t n = 1;
  std::size_t d_E = 1;
  CVector psi_abe;
  std::vector<CMatrix> kraus;

  std::size_t block_dim() const { return ipow(d, n); }
  std::size_t state_dim() const { return block_dim() * block_dim() * d_E; }
  CompositeDims dims() const { return {{block_dim(), block_dim(), d_E}}; }
};

inline double kraus_completeness_residual(const std::vector<CMatrix>& kraus) {
  if (kraus.empty()) return std::numeric_limits<double>::infinity();
  CMatrix sum = CMatrix::Zero(kraus.front().cols(), kraus.front().cols());
  for (const auto& v : kraus) sum += v.adjoint() * v;
  return max_abs_diff(sum, CMatrix::Identity(sum.rows(), sum.cols()));
}

/// Checks shapes, the resource guard d^(2n) d_E <= 4096, normalisation of the
/// source and Kraus completeness.
inline void validate_attack(const AttackModel& am, double tol = kDefaultTol) {
  if (am.d < 2 || am.n < 1 || am.d_E < 1) throw AttackModelError("attack: d >= 2, n >= 1, d_E >= 1 required");
  if (ipow(am.d, 2 * am.n) * am.d_E > kMaxBlockStateDim) {
    throw ResourceLimitError("attack: d^(2n) d_E exceeds " + std::to_string(kMaxBlockStateDim));
  }
  if (static_cast<std::size_t>(am.psi_abe.size()) != am.state_dim()) {
    throw AttackModelError("attack: psi_abe has dimension " + std::to_string(am.psi_abe.size()) +
                           ", expected " + std::to_string(am.state_dim()));
  }
  if (std::abs(am.psi_abe.norm() - 1.0) > tol) throw AttackModelError("attack: psi_abe is not normalised");
  if (am.kraus.empty()) throw AttackModelError("attack: at least one Kraus operator is required");
  const auto be = static_cast<Eigen::Index>(am.block_dim() * am.d_E);
  for (const auto& v : am.kraus) {
    if (v.rows() != be || v.cols() != be) {
      throw AttackModelError("attack: Kraus operators must be square on B x E (dimension " +
                             std::to_string(be) + ")");
    }
  }
  const double res = kraus_completeness_residual(am.kraus);
  if (!(res < tol)) {
    throw AttackModelError("attack: Kraus operators are not trace preserving (residual " +
                           std::to_string(res) + ")");
  }
}

struct WeylOperator {
  std::size_t d = 0;
  std::size_t m = 0;
  std::size_t l = 0;
  CMatrix matrix;
};

/// X^m Z^l with X|j> = |j+1 mod d> and Z|j> = exp(2 pi i j / d)|j>.
inline WeylOperator weyl(std::size_t d, std::size_t m, std::size_t l) {
  if (d < 1 || m >= d || l >= d) throw std::out_of_range("weyl: require 0 <= m, l < d");
  const auto n = static_cast<Eigen::Index>(d);
  CMatrix u = CMatrix::Zero(n, n);
  for (std::size_t j = 0; j < d; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((l * j) % d) / static_cast<double>(d);
    u(static_cast<Eigen::Index>((j + m) % d), static_cast<Eigen::Index>(j)) = std::polar(1.0, angle);
  }
  return {d, m, l, u};
}

/// Block Weyl operator for n rounds: index w = m * d^n + l with m and l the
/// base-d digit strings of the per-round shifts and phases (round 0 slowest).
inline CMatrix weyl_block(std::size_t d, std::size_t n, std::size_t w) {
  const std::size_t blk = ipow(d, n);
  std::size_t mi = w / blk;
  std::size_t li = w % blk;
  std::vector<std::size_t> ms(n), ls(n);
  for (std::size_t r = n; r-- > 0;) {
    ms[r] = mi % d;
    mi /= d;
    ls[r] = li % d;
    li /= d;
  }
  CMatrix u = weyl(d, ms[0], ls[0]).matrix;
  for (std::size_t r = 1; r < n; ++r) u = tensor(u, weyl(d, ms[r], ls[r]).matrix);
  return u;
}

/// (1 x U) Omega for U on the second factor.
inline CVector apply_second_factor(const CMatrix& u) {
  const auto n = u.rows();
  CVector out(n * n);
  const double amp = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index a = 0; a < n; ++a) out.segment(a * n, n) = amp * u.col(a);
  return out;
}

/// Coefficients p(w, beta) of psi in the basis (1 x U_w) Omega x e_beta.
struct SourceDecomposition {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t d_E = 0;
  CMatrix coeffs;  // rows: Weyl index w, cols: beta

  std::size_t block_dim() const { return ipow(d, n); }

  /// sum_w p(w, beta) U_w.
  CMatrix u_hat(std::size_t beta) const {
    const auto blk = static_cast<Eigen::Index>(block_dim());
    CMatrix u = CMatrix::Zero(blk, blk);
    for (Eigen::Index w = 0; w < coeffs.rows(); ++w) {
      const Complex c = coeffs(w, static_cast<Eigen::Index>(beta));
      if (c != Complex(0.0)) u += c * weyl_block(d, n, static_cast<std::size_t>(w));
    }
    return u;
  }
};

inline SourceDecomposition decompose_source(const CVector& psi, std::size_t d, std::size_t n, std::size_t d_E) {
  const std::size_t blk = ipow(d, n);
  if (static_cast<std::size_t>(psi.size()) != blk * blk * d_E) {
    throw DimensionError("decompose_source: state dimension does not match d^(2n) d_E");
  }
  SourceDecomposition dec{d, n, d_E, CMatrix::Zero(static_cast<Eigen::Index>(blk * blk), static_cast<Eigen::Index>(d_E))};
  const auto de = static_cast<Eigen::Index>(d_E);
  for (std::size_t w = 0; w < blk * blk; ++w) {
    const CVector basis_ab = apply_second_factor(weyl_block(d, n, w));
    for (Eigen::Index beta = 0; beta < de; ++beta) {
      Complex c = 0.0;
      for (Eigen::Index ab = 0; ab < basis_ab.size(); ++ab) c += std::conj(basis_ab(ab)) * psi(ab * de + beta);
      dec.coeffs(static_cast<Eigen::Index>(w), beta) = c;
    }
  }
  return dec;
}

inline SourceDecomposition decompose_source(const AttackModel& am) {
  return decompose_source(am.psi_abe, am.d, am.n, am.d_E);
}

inline CVector reconstruct_source(const SourceDecomposition& dec) {
  const std::size_t blk = dec.block_dim();
  const auto de = static_cast<Eigen::Index>(dec.d_E);
  CVector psi = CVector::Zero(static_cast<Eigen::Index>(blk * blk) * de);
  for (std::size_t w = 0; w < blk * blk; ++w) {
    const CVector basis_ab = apply_second_factor(weyl_block(dec.d, dec.n, w));
    for (Eigen::Index beta = 0; beta < de; ++beta) {
      const Complex c = dec.coeffs(static_cast<Eigen::Index>(w), beta);
      for (Eigen::Index ab = 0; ab < basis_ab.size(); ++ab) psi(ab * de + beta) += c * basis_ab(ab);
    }
  }
  return psi;
}

struct ProjectedState {
  CVector state;  // normalised, on A x B x E
  double probability = 0.0;
};

namespace detail {

inline void check_tuples(const AttackModel& am, const BasisSet& bs, std::span<const std::size_t> bvec,
                         std::span<const std::size_t> ivec) {
  if (bs.dim() != am.d) throw DimensionError("attack and basis set dimensions differ");
  if (bvec.size() != am.n || ivec.size() != am.n) throw DimensionError("basis/outcome tuples must have length n");
  for (std::size_t r = 0; r < am.n; ++r) {
    if (bvec[r] >= bs.count() || ivec[r] >= bs.dim()) throw std::out_of_range("basis or outcome index out of range");
  }
}

// (1_A x |phi><phi| x 1_E) psi, unnormalised.
inline CVector project_bob(const AttackModel& am, const CVector& phi) {
  const auto blk = static_cast<Eigen::Index>(am.block_dim());
  const auto de = static_cast<Eigen::Index>(am.d_E);
  CVector out(am.psi_abe.size());
  for (Eigen::Index a = 0; a < blk; ++a) {
    // Slice of psi with fixed a: a blk x d_E matrix (b, e).
    const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice(
        am.psi_abe.data() + a * blk * de, blk, de);
    const Eigen::RowVectorXcd amp = phi.adjoint() * slice;  // sum_b conj(phi_b) psi(a, b, e)
    Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dst(
        out.data() + a * blk * de, blk, de);
    dst = phi * amp;
  }
  return out;
}

}  // namespace detail

/// Bob measures the block in product basis bvec and finds ivec; the B factor
/// collapses onto the returned eigenstate. Throws on zero-probability outcomes.
inline ProjectedState bob_projected_state(const AttackModel& am, const BasisSet& bs,
                                          std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) {
  detail::check_tuples(am, bs, bvec, ivec);
  CVector v = detail::project_bob(am, product_basis_vector(bs, bvec, ivec));
  const double prob = v.squaredNorm();
  if (prob < kZeroProbability) throw ZeroProbabilityOutcome("Bob's outcome has zero probability");
  return {v / std::sqrt(prob), prob};
}

/// Unnormalised projected state in the form sum_beta (U_beta^T x 1) phi_hat x e_beta.
inline CVector bob_projected_state_weyl_form(const SourceDecomposition& dec, const BasisSet& bs,
                                             std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) {
  const CVector ph = phi_hat_product(bs, bvec, ivec);
  const auto blk = static_cast<Eigen::Index>(dec.block_dim());
  const auto de = static_cast<Eigen::Index>(dec.d_E);
  CVector out = CVector::Zero(ph.size() * de);
  const CMatrix id = CMatrix::Identity(blk, blk);
  for (Eigen::Index beta = 0; beta < de; ++beta) {
    const CVector part = tensor(CMatrix(dec.u_hat(static_cast<std::size_t>(beta)).transpose()), id) * ph;
    for (Eigen::Index ab = 0; ab < part.size(); ++ab) out(ab * de + beta) = part(ab);
  }
  return out;
}

/// The pure branches (1_A x V_l) state, one per Kraus operator.
inline std::vector<CVector> feedback_branches(const AttackModel& am, const CVector& state) {
  const auto blk = static_cast<Eigen::Index>(am.block_dim());
  const auto be = static_cast<Eigen::Index>(am.block_dim() * am.d_E);
  if (state.size() != blk * be) throw DimensionError("feedback: state dimension mismatch");
  using RowMajor = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> s(state.data(), blk, be);
  std::vector<CVector> out;
  out.reserve(am.kraus.size());
  for (const auto& v : am.kraus) {
    CVector branch(state.size());
    Eigen::Map<RowMajor> dst(branch.data(), blk, be);
    dst = s * v.transpose();
    out.push_back(std::move(branch));
  }
  return out;
}

/// sum_l (1_A x V_l) |state><state| (1_A x V_l)^dagger on A x B x E.
inline CMatrix apply_feedback(const AttackModel& am, const CVector& state) {
  const auto n = state.size();
  CMatrix rho = CMatrix::Zero(n, n);
  for (const auto& br : feedback_branches(am, state)) rho += projector(br);
  return rho;
}

struct ConditionalState {
  CMatrix rho;  // unit trace
  double probability = 0.0;
};

/// Alice's state on A x B before her measurement, conditioned on (bvec, ivec).
inline ConditionalState alice_state(const AttackModel& am, const BasisSet& bs, std::span<const std::size_t> bvec,
                                    std::span<const std::size_t> ivec) {
  const auto proj = bob_projected_state(am, bs, bvec, ivec);
  const auto ab = static_cast<Eigen::Index>(am.block_dim() * am.block_dim());
  CMatrix rho = CMatrix::Zero(ab, ab);
  const CompositeDims dims = am.dims();
  for (const auto& br : feedback_branches(am, proj.state)) rho += partial_trace_pure(br, dims, {0, 1});
  return {rho, proj.probability};
}

/// E_lk = sum_beta U_beta^T x (sum_{gamma,nu} V_l[(gamma,k),(nu,beta)] |gamma><nu|),
/// indexed l * d_E + k.
inline std::vector<CMatrix> build_E_operators(const AttackModel& am) {
  const auto dec = decompose_source(am);
  const auto blk = static_cast<Eigen::Index>(am.block_dim());
  const auto de = static_cast<Eigen::Index>(am.d_E);
  std::vector<CMatrix> u_t;
  for (Eigen::Index beta = 0; beta < de; ++beta) u_t.push_back(dec.u_hat(static_cast<std::size_t>(beta)).transpose());
  std::vector<CMatrix> out;
  for (const auto& v : am.kraus) {
    for (Eigen::Index k = 0; k < de; ++k) {
      CMatrix e = CMatrix::Zero(blk * blk, blk * blk);
      for (Eigen::Index beta = 0; beta < de; ++beta) {
        CMatrix kb(blk, blk);
        for (Eigen::Index g = 0; g < blk; ++g) {
          for (Eigen::Index nu = 0; nu < blk; ++nu) kb(g, nu) = v(g * de + k, nu * de + beta);
        }
        if (kb.cwiseAbs().maxCoeff() == 0.0) continue;
        e += tensor(u_t[static_cast<std::size_t>(beta)], kb);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

/// sum E |phi_hat><phi_hat| E^dagger normalised, with the outcome probability.
inline ConditionalState alice_state_from_E(const std::vector<CMatrix>& e_ops, const CVector& phi_hat_block) {
  const auto n = phi_hat_block.size();
  CMatrix rho = CMatrix::Zero(n, n);
  for (const auto& e : e_ops) rho += projector(e * phi_hat_block);
  const double tr = rho.trace().real();
  if (tr < kZeroProbability) throw ZeroProbabilityOutcome("Bob's outcome has zero probability");
  return {rho / tr, tr};
}

namespace detail {

inline void check_strategy(const ProductStrategy& ps, const AttackModel& am) {
  if (ps.dim() != am.d || ps.n() != am.n) {
    throw DimensionError("strategy (d=" + std::to_string(ps.dim()) + ", n=" + std::to_string(ps.n()) +
                         ") does not match attack (d=" + std::to_string(am.d) + ", n=" + std::to_string(am.n) + ")");
  }
}

// Calls fn(bvec, ivec) for every basis tuple and outcome tuple.
template <typename Fn>
void for_each_outcome(std::size_t k, std::size_t d, std::size_t n, Fn&& fn) {
  const std::size_t nb = ipow(k, n);
  const std::size_t ni = ipow(d, n);
  std::vector<std::size_t> bvec(n), ivec(n);
  for (std::size_t bi = 0; bi < nb; ++bi) {
    std::size_t t = bi;
    for (std::size_t r = n; r-- > 0;) {
      bvec[r] = t % k;
      t /= k;
    }
    for (std::size_t ii = 0; ii < ni; ++ii) {
      t = ii;
      for (std::size_t r = n; r-- > 0;) {
        ivec[r] = t % d;
        t /= d;
      }
      fn(std::span<const std::size_t>(bvec), std::span<const std::size_t>(ivec));
    }
  }
}

}  // namespace detail

/// p(x) <eta_x | rho_A | eta_x> for product guessing-function index x.
inline double guess_probability(const ProductStrategy& ps, const AttackModel& am, std::size_t x,
                                std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) {
  detail::check_strategy(ps, am);
  const auto st = alice_state(am, ps.base().basis_set, bvec, ivec);
  const CVector eta = ps.vector(x);
  return ps.weight(x) * eta.dot(st.rho * eta).real();
}

/// Probability that Alice's inferred block equals Bob's, given (bvec, ivec).
inline double correct_probability(const ProductStrategy& ps, const CMatrix& rho_alice,
                                  std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) {
  return (rho_alice * ps.guess_operator(bvec, ivec)).trace().real();
}

/// Exact probability that Alice's inferred block differs from Bob's, averaged
/// over uniform basis tuples and Born-rule outcomes.
inline double detection_probability(const ProductStrategy& ps, const AttackModel& am) {
  detail::check_strategy(ps, am);
  validate_attack(am);
  const BasisSet& bs = ps.base().basis_set;
  const double pb = 1.0 / static_cast<double>(ipow(bs.count(), am.n));
  double total = 0.0;
  detail::for_each_outcome(bs.count(), am.d, am.n, [&](auto bvec, auto ivec) {
    const CVector v = detail::project_bob(am, product_basis_vector(bs, bvec, ivec));
    if (v.squaredNorm() < kZeroProbability) return;
    const auto st = alice_state(am, bs, bvec, ivec);
    total += pb * st.probability * (1.0 - correct_probability(ps, st.rho, bvec, ivec));
  });
  return std::clamp(total, 0.0, 1.0);
}

/// Eve's final state on E x L (E slow), conditioned on (bvec, ivec).
inline CMatrix eve_final_state(const AttackModel& am, const BasisSet& bs, std::span<const std::size_t> bvec,
                               std::span<const std::size_t> ivec) {
  const auto proj = bob_projected_state(am, bs, bvec, ivec);
  const auto de = static_cast<Eigen::Index>(am.d_E);
  const auto nl = static_cast<Eigen::Index>(am.kraus.size());
  CMatrix rho = CMatrix::Zero(de * nl, de * nl);
  const CompositeDims dims = am.dims();
  const auto branches = feedback_branches(am, proj.state);
  for (Eigen::Index l = 0; l < nl; ++l) {
    const CMatrix block = partial_trace_pure(branches[static_cast<std::size_t>(l)], dims, {2});
    for (Eigen::Index k = 0; k < de; ++k) {
      for (Eigen::Index kp = 0; kp < de; ++kp) rho(k * nl + l, kp * nl + l) = block(k, kp);
    }
  }
  return rho;
}

struct OutcomeRecord {
  std::vector<std::size_t> bvec;
  std::vector<std::size_t> ivec;
  double probability = 0.0;  // of ivec given bvec
  double guess_error = 0.0;  // 1 - P(Alice's block guess is right)
};

struct AttackReport {
  double detection_probability = 0.0;
  double leakage = 0.0;
  std::vector<OutcomeRecord> outcomes;
};

/// Worst-case trace distance between Eve's final states over pairs of
/// possible outcomes (bvec, ivec).
inline double leakage(const AttackModel& am, const BasisSet& bs) {
  validate_attack(am);
  std::vector<CMatrix> states;
  detail::for_each_outcome(bs.count(), am.d, am.n, [&](auto bvec, auto ivec) {
    const CVector v = detail::project_bob(am, product_basis_vector(bs, bvec, ivec));
    if (v.squaredNorm() < kZeroProbability) return;
    states.push_back(eve_final_state(am, bs, bvec, ivec));
  });
  double worst = 0.0;
  for (std::size_t p = 0; p < states.size(); ++p) {
    for (std::size_t q = p + 1; q < states.size(); ++q) worst = std::max(worst, trace_distance(states[p], states[q]));
  }
  return worst;
}

inline AttackReport evaluate_attack(const ProductStrategy& ps, const AttackModel& am) {
  detail::check_strategy(ps, am);
  validate_attack(am);
  const BasisSet& bs = ps.base().basis_set;
  AttackReport rep;
  const double pb = 1.0 / static_cast<double>(ipow(bs.count(), am.n));
  detail::for_each_outcome(bs.count(), am.d, am.n, [&](auto bvec, auto ivec) {
    OutcomeRecord rec{{bvec.begin(), bvec.end()}, {ivec.begin(), ivec.end()}, 0.0, 0.0};
    const CVector v = detail::project_bob(am, product_basis_vector(bs, bvec, ivec));
    if (v.squaredNorm() >= kZeroProbability) {
      const auto st = alice_state(am, bs, bvec, ivec);
      rec.probability = st.probability;
      rec.guess_error = std::clamp(1.0 - correct_probability(ps, st.rho, bvec, ivec), 0.0, 1.0);
      rep.detection_probability += pb * rec.probability * rec.guess_error;
    }
    rep.outcomes.push_back(std::move(rec));
  });
  rep.detection_probability = std::clamp(rep.detection_probability, 0.0, 1.0);
  rep.leakage = leakage(am, bs);
  return rep;
}

// ---------------------------------------------------------------------------
// Canned attacks.

/// The honest source Omega x e_0 with an untouched return channel.
inline AttackModel identity_attack(std::size_t d, std::size_t n = 1) {
  AttackModel am{"identity", d, n, 1, {}, {}};
  am.psi_abe = omega(am.block_dim());
  am.kraus.push_back(CMatrix::Identity(static_cast<Eigen::Index>(am.block_dim()), static_cast<Eigen::Index>(am.block_dim())));
  return am;
}

/// With probability `strength` Eve measures every returned particle in basis
/// b_star, records the outcome in E and resends the eigenstate.
inline AttackModel intercept_resend(const BasisSet& bs, std::size_t n, std::size_t b_star, double strength = 1.0) {
  if (b_star >= bs.count()) throw std::out_of_range("intercept_resend: basis index out of range");
  if (strength < 0.0 || strength > 1.0) throw std::invalid_argument("intercept_resend: strength must lie in [0, 1]");
  AttackModel am{"intercept-resend", bs.dim(), n, ipow(bs.dim(), n), {}, {}};
  const std::size_t blk = am.block_dim();
  am.psi_abe = tensor(omega(blk), basis_vector(am.d_E, 0));
  const auto be = static_cast<Eigen::Index>(blk * am.d_E);
  if (strength < 1.0) am.kraus.push_back(std::sqrt(1.0 - strength) * CMatrix::Identity(be, be));
  if (strength > 0.0) {
    CMatrix shift = CMatrix::Zero(static_cast<Eigen::Index>(am.d_E), static_cast<Eigen::Index>(am.d_E));
    for (std::size_t j = 0; j < am.d_E; ++j) shift(static_cast<Eigen::Index>((j + 1) % am.d_E), static_cast<Eigen::Index>(j)) = 1.0;
    const std::vector<std::size_t> bvec(n, b_star);
    CMatrix shift_j = CMatrix::Identity(shift.rows(), shift.cols());
    for (std::size_t j = 0; j < blk; ++j) {
      std::vector<std::size_t> jvec(n);
      std::size_t t = j;
      for (std::size_t r = n; r-- > 0;) {
        jvec[r] = t % bs.dim();
        t /= bs.dim();
      }
      const CMatrix p = projector(product_basis_vector(bs, bvec, jvec));
      am.kraus.push_back(std::sqrt(strength) * tensor(p, shift_j));
      shift_j = shift * shift_j;
    }
  }
  return am;
}

/// A source that mixes in the orthogonal maximally entangled state
/// (1 x X) Omega, entangled with a flag qubit kept by Eve.
inline AttackModel source_replace(std::size_t d, std::size_t n, double eps) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("source_replace: eps must lie in [0, 1]");
  AttackModel am{"source-replace", d, n, 2, {}, {}};
  const std::size_t blk = am.block_dim();
  const auto nb = static_cast<Eigen::Index>(blk);
  CMatrix shift = CMatrix::Zero(nb, nb);
  for (Eigen::Index j = 0; j < nb; ++j) shift((j + 1) % nb, j) = 1.0;
  am.psi_abe = std::sqrt(1.0 - eps) * tensor(omega(blk), basis_vector(2, 0)) +
               std::sqrt(eps) * tensor(apply_second_factor(shift), basis_vector(2, 1));
  am.kraus.push_back(CMatrix::Identity(nb * 2, nb * 2));
  return am;
}

/// Eve entangles a probe qubit with Bob's outgoing particle: controlled on the
/// computational state |a> of B the probe is rotated to
/// cos(t_a)|0> + sin(t_a)|1>, t_a = theta * a / (d^n - 1).
inline AttackModel probe_entangle(std::size_t d, std::size_t n, double theta) {
  AttackModel am{"probe", d, n, 2, {}, {}};
  const std::size_t blk = am.block_dim();
  const auto nb = static_cast<Eigen::Index>(blk);
  am.psi_abe = CVector::Zero(static_cast<Eigen::Index>(am.state_dim()));
  const double amp = 1.0 / std::sqrt(static_cast<double>(blk));
  for (Eigen::Index a = 0; a < nb; ++a) {
    const double t = theta * static_cast<double>(a) / static_cast<double>(blk - 1);
    const Eigen::Index ab = a * nb + a;
    am.psi_abe(ab * 2 + 0) = amp * std::cos(t);
    am.psi_abe(ab * 2 + 1) = amp * std::sin(t);
  }
  am.kraus.push_back(CMatrix::Identity(nb * 2, nb * 2));
  return am;
}

/// Source Omega x eve_state and a channel acting on E alone (V_l = 1 x W_l).
/// Every E_lk of such an attack is a multiple of the identity.
inline AttackModel scalar_form_attack(std::size_t d, std::size_t n, const CVector& eve_state,
                                      const std::vector<CMatrix>& eve_kraus) {
  AttackModel am{"scalar-form", d, n, static_cast<std::size_t>(eve_state.size()), {}, {}};
  const std::size_t blk = am.block_dim();
  am.psi_abe = tensor(omega(blk), CVector(eve_state.normalized()));
  const CMatrix id = CMatrix::Identity(static_cast<Eigen::Index>(blk), static_cast<Eigen::Index>(blk));
  for (const auto& w : eve_kraus) am.kraus.push_back(tensor(id, w));
  return am;
}

/// Gaussian vector normalised to the unit sphere.
template <typename Rng>
CVector random_state(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> g;
  CVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = Complex(g(rng), g(rng));
  return v.normalized();
}

/// Kraus operators of a random channel on `dim` with `count` outcomes, cut
/// from a random isometry.
template <typename Rng>
std::vector<CMatrix> random_kraus(std::size_t dim, std::size_t count, Rng& rng) {
  std::normal_distribution<double> g;
  const auto n = static_cast<Eigen::Index>(dim);
  const auto rows = n * static_cast<Eigen::Index>(count);
  CMatrix m(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<CMatrix> qr(m);
  const CMatrix iso = qr.householderQ() * CMatrix::Identity(rows, n);
  std::vector<CMatrix> out;
  for (std::size_t l = 0; l < count; ++l) out.push_back(iso.block(static_cast<Eigen::Index>(l) * n, 0, n, n));
  return out;
}

template <typename Rng>
AttackModel random_attack(std::size_t d, std::size_t n, std::size_t d_E, std::size_t num_kraus, Rng& rng) {
  AttackModel am{"random", d, n, d_E, {}, {}};
  am.psi_abe = random_state(am.state_dim(), rng);
  am.kraus = random_kraus(am.block_dim() * d_E, num_kraus, rng);
  return am;
}

/// Projects an attack onto the undetectable form: keeps only the identity
/// Weyl component of the source and replaces each V_l by 1 x W_l with W_l
/// the normalised partial trace of V_l over B, re-orthonormalised so the
/// channel stays trace preserving.
inline AttackModel scalarize(const AttackModel& am) {
  const auto dec = decompose_source(am);
  CVector eve = dec.coeffs.row(0).transpose();
  if (eve.norm() < 1e-12) eve = basis_vector(am.d_E, 0);
  const auto blk = static_cast<Eigen::Index>(am.block_dim());
  const auto de = static_cast<Eigen::Index>(am.d_E);
  std::vector<CMatrix> ws;
  CMatrix s = CMatrix::Zero(de, de);
  for (const auto& v : am.kraus) {
    CMatrix w = CMatrix::Zero(de, de);
    for (Eigen::Index g = 0; g < blk; ++g) w += v.block(g * de, g * de, de, de);
    w /= static_cast<double>(blk);
    s += w.adjoint() * w;
    ws.push_back(std::move(w));
  }
  const CMatrix s_inv_sqrt = inverse_sqrt(s);
  for (auto& w : ws) w = w * s_inv_sqrt;
  auto out = scalar_form_attack(am.d, am.n, eve, ws);
  out.name = "scalarized";
  return out;
}

}  // namespace meanking
