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


#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "meanking/bases.hpp"
#include "test_support.hpp"

namespace meanking {
namespace {

// |<v|P|v>| = 1 iff v is an eigenvector of the unitary hermitian P.
bool is_eigenbasis_of(const Basis& basis, const CMatrix& p) {
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const CVector v = basis.vector(i);
    if (std::abs(std::abs(v.dot(p * v)) - 1.0) > 1e-12) return false;
  }
  return true;
}

TEST(GenMub, QubitBasesArePauliEigenbases) {
  const BasisSet bs = gen_mub(2);
  ASSERT_EQ(bs.count(), 3u);
  CMatrix x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  const CMatrix y = Complex(0.0, 1.0) * x * z;  // i XZ, hermitian
  const std::vector<CMatrix> paulis = {z, x, y};
  for (std::size_t b = 0; b < 3; ++b) {
    int matches = 0;
    for (const auto& p : paulis) matches += is_eigenbasis_of(bs.basis(b), p) ? 1 : 0;
    EXPECT_EQ(matches, 1) << "basis " << b;
    EXPECT_TRUE(is_eigenbasis_of(bs.basis(b), paulis[b]));
  }
}

TEST(GenMub, QubitOverlapsAreOneHalf) {
  const BasisSet bs = gen_mub(2);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(std::norm(bs.vector(a, i).dot(bs.vector(b, j))), 0.5, 1e-15);
      }
    }
  }
}

TEST(GenMub, QutritHasFourUnbiasedBases) {
  const BasisSet bs = gen_mub(3);
  ASSERT_EQ(bs.count(), 4u);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          EXPECT_NEAR(std::norm(bs.vector(a, i).dot(bs.vector(b, j))), 1.0 / 3.0, 1e-12);
        }
      }
    }
  }
}

TEST(GenMub, UnsupportedDimensions) {
  for (std::size_t d : {0u, 1u, 4u, 6u, 8u, 9u, 11u}) EXPECT_THROW(gen_mub(d), UnsupportedDimension) << d;
}

class MubDimension : public ::testing::TestWithParam<std::size_t> {};

TEST_P(MubDimension, PassesEveryCheck) {
  const std::size_t d = GetParam();
  const BasisSet bs = gen_mub(d);
  EXPECT_EQ(bs.count(), d + 1);
  const auto ortho = check_orthonormal(bs);
  EXPECT_TRUE(ortho.ok);
  EXPECT_LT(ortho.worst, 1e-12);
  const auto unb = check_unbiased(bs, 1e-10);
  EXPECT_TRUE(unb.ok);
  const auto nd = check_nondegenerate(bs);
  EXPECT_TRUE(nd.ok);
  EXPECT_EQ(nd.rank, d * d);
  EXPECT_EQ(nd.expected, (d + 1) * (d - 1) + 1);
  const auto cm = check_classical_model(bs);
  EXPECT_TRUE(cm.ok);
  EXPECT_LT(cm.marginal_residual, 1e-9);
  const auto rep = validate(bs);
  EXPECT_TRUE(rep.passed());
  ASSERT_TRUE(rep.classical_model.has_value());
  EXPECT_TRUE(*rep.classical_model);
}

INSTANTIATE_TEST_SUITE_P(Primes, MubDimension, ::testing::Values(2u, 3u, 5u));

TEST(CheckOrthonormal, DuplicatedVectorFails) {
  CMatrix m = CMatrix::Identity(3, 3);
  m.col(2) = m.col(1);
  EXPECT_FALSE(check_orthonormal(BasisSet(3, {m})).ok);
}

TEST(CheckOrthonormal, ScaledBasisWorstIsDeficit) {
  const BasisSet bs(2, {0.9 * gen_mub(2).basis(1).vectors});
  const auto r = check_orthonormal(bs);
  EXPECT_FALSE(r.ok);
  EXPECT_NEAR(r.worst, 0.19, 1e-12);
}

TEST(CheckNondegenerate, SingleBasis) {
  for (std::size_t d : {2u, 3u, 5u}) {
    const BasisSet bs(d, {gen_mub(d).basis(1).vectors});
    const auto r = check_nondegenerate(bs);
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.rank, d);
  }
}

TEST(CheckNondegenerate, RepeatedBasisIsDegenerate) {
  for (std::size_t d : {2u, 3u}) {
    const CMatrix m = gen_mub(d).basis(0).vectors;
    const auto r = check_nondegenerate(BasisSet(d, {m, m}));
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.rank, d);
    EXPECT_EQ(r.expected, 2 * (d - 1) + 1);
  }
}

TEST(CheckNondegenerate, InvariantUnderRelabelingAndRotation) {
  for (std::size_t d : {2u, 3u}) {
    const BasisSet base = gen_mub(d);
    const auto n = static_cast<Eigen::Index>(d);
    for (int trial = 0; trial < 5; ++trial) {
      const CMatrix u = testing::random_unitary(n);
      std::vector<CMatrix> rotated;
      for (std::size_t b = 0; b < base.count(); ++b) {
        CMatrix m = u * base.basis(b).vectors;
        // Cyclic relabeling of the outcomes, plus a phase on each vector.
        CMatrix relabeled(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          relabeled.col((i + trial + 1) % n) = std::polar(1.0, 0.37 * static_cast<double>(i + trial)) * m.col(i);
        }
        rotated.push_back(relabeled);
      }
      const auto r = check_nondegenerate(BasisSet(d, rotated));
      EXPECT_TRUE(r.ok);
      EXPECT_EQ(r.rank, d * d);
      // Dropping one basis keeps the set non-degenerate with one less direction per outcome.
      rotated.pop_back();
      EXPECT_EQ(check_nondegenerate(BasisSet(d, rotated)).rank, d * (d - 1) + 1);
    }
  }
}

TEST(PairwiseJoint, UniformForMubs) {
  const BasisSet b2 = gen_mub(2);
  EXPECT_LT((pairwise_joint(b2, 0, 1).array() - 0.25).abs().maxCoeff(), 1e-15);
  const BasisSet b3 = gen_mub(3);
  EXPECT_LT((pairwise_joint(b3, 1, 3).array() - 1.0 / 9.0).abs().maxCoeff(), 1e-12);
}

TEST(PairwiseJoint, Preconditions) {
  const BasisSet bs = gen_mub(2);
  EXPECT_THROW(pairwise_joint(bs, 1, 1), std::invalid_argument);
  EXPECT_THROW(pairwise_joint(bs, 0, 3), std::out_of_range);
}

TEST(PairwiseJoint, MarginalsAreUniformForAnyBases) {
  // Rows and columns of a joint built from two orthonormal bases sum to 1/d.
  const Eigen::Index d = 4;
  const BasisSet bs(4, {testing::random_unitary(d), testing::random_unitary(d)});
  const RMatrix j = pairwise_joint(bs, 0, 1);
  EXPECT_LT((j.rowwise().sum().array() - 0.25).abs().maxCoeff(), 1e-12);
  EXPECT_LT((j.colwise().sum().array() - 0.25).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(j.sum(), 1.0, 1e-12);
}

TEST(ClassicalModel, SingleBasisIsUniform) {
  const BasisSet bs(3, {gen_mub(3).basis(2).vectors});
  const auto cm = check_classical_model(bs);
  ASSERT_TRUE(cm.ok);
  ASSERT_TRUE(cm.model.has_value());
  EXPECT_LT((cm.model->array() - 1.0 / 3.0).abs().maxCoeff(), 1e-12);
}

TEST(ClassicalModel, QutritModelReproducesAllSixMarginals) {
  const BasisSet bs = gen_mub(3);
  const auto cm = check_classical_model(bs);
  ASSERT_TRUE(cm.ok);
  const RVector& q = *cm.model;
  ASSERT_EQ(q.size(), 81);
  EXPECT_GE(q.minCoeff(), -1e-12);
  int pairs = 0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b, ++pairs) {
      const RMatrix target = pairwise_joint(bs, a, b);
      RMatrix got = RMatrix::Zero(3, 3);
      for (Eigen::Index v = 0; v < 81; ++v) {
        std::size_t digits[4];
        std::size_t t = static_cast<std::size_t>(v);
        for (std::size_t f = 4; f-- > 0;) {
          digits[f] = t % 3;
          t /= 3;
        }
        got(static_cast<Eigen::Index>(digits[b]), static_cast<Eigen::Index>(digits[a])) += q(v);
      }
      EXPECT_LT((got - target).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
  EXPECT_EQ(pairs, 6);
}

TEST(ClassicalModel, BudgetGuard) {
  EXPECT_THROW(check_classical_model(gen_mub(7)), ResourceLimitError);
  // validate() skips the LP instead of failing.
  const auto rep = validate(gen_mub(7));
  EXPECT_FALSE(rep.classical_model.has_value());
  EXPECT_TRUE(rep.passed());
}

TEST(Validate, AcceptsNonPrimeDimensions) {
  const Eigen::Index d = 4;
  CMatrix f(d, d);
  for (Eigen::Index s = 0; s < d; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) f(s, i) = std::polar(0.5, 2.0 * std::numbers::pi * static_cast<double>(s * i) / 4.0);
  }
  const auto rep = validate(BasisSet(4, {CMatrix::Identity(d, d), f}));
  EXPECT_TRUE(rep.orthonormal);
  EXPECT_TRUE(rep.unbiased);
  EXPECT_TRUE(rep.nondegenerate);
  EXPECT_EQ(rep.span_rank, 7u);
}

TEST(Validate, QutritRunsWellUnderASecond) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = validate(gen_mub(3));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_TRUE(rep.passed());
  EXPECT_LT(secs, 1.0);
}

}  // namespace
}  // namespace meanking
