#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/SVD>

#include "stm/decomp.hpp"
#include "stm/error.hpp"
#include "support.hpp"

using namespace stm;
using stm::testing::low_rank_tensor;
using stm::testing::random_tensor;
using stm::testing::relative_error;

namespace {

// Plain ST-HOSVD via JacobiSVD, no weighting: returns the reconstruction at `ranks`.
DenseTensor st_hosvd_oracle(const DenseTensor& t, const Shape& ranks) {
  DenseTensor g = t;
  std::vector<Matrix> u(t.order());
  for (std::size_t m = 0; m < t.order(); ++m) {
    Eigen::JacobiSVD<Matrix> svd(matricize(g, m), Eigen::ComputeFullU);
    u[m] = svd.matrixU().leftCols(static_cast<Eigen::Index>(ranks[m]));
    g = mode_product(g, u[m].transpose(), m);
  }
  for (std::size_t m = 0; m < t.order(); ++m) g = mode_product(g, u[m], m);
  return g;
}

void expect_orthonormal(const Matrix& u, double tol = 1e-12) {
  const Matrix gram = u.transpose() * u;
  EXPECT_LE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), tol);
}

void expect_sign_fixed(const Matrix& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < u.rows(); ++i)
      if (std::abs(u(i, c)) > std::abs(u(best, c))) best = i;
    EXPECT_GT(u(best, c), 0.0) << "column " << c;
  }
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST(WeightedHosvd, FullRankReconstructsExactly) {
  const DenseTensor t = random_tensor({5, 4, 6}, 1);
  for (double p : {0.0, 1.0 / 3.0, 1.0}) {
    const TuckerTensor d = weighted_hosvd(t, Shape{5, 4, 6}, p);
    EXPECT_LT(relative_error(tucker_reconstruct(d), t), 1e-12);
  }
}

TEST(WeightedHosvd, ExactRankRecovery) {
  const Shape ranks{2, 3, 2};
  const DenseTensor t = low_rank_tensor({6, 7, 5}, ranks, 2);
  const TuckerTensor d = weighted_hosvd(t, ranks, 1.0 / 3.0);
  EXPECT_EQ(d.ranks(), ranks);
  EXPECT_LT(relative_error(tucker_reconstruct(d), t), 1e-12);
}

TEST(WeightedHosvd, FactorInvariants) {
  const DenseTensor t = random_tensor({6, 5, 4}, 3);
  const double p = 0.5;
  const TuckerTensor d = weighted_hosvd(t, Shape{3, 3, 2}, p);
  EXPECT_EQ(d.p, p);
  for (std::size_t m = 0; m < 3; ++m) {
    expect_orthonormal(d.bases[m]);
    expect_sign_fixed(d.bases[m]);
    const Vector& s = d.sigmas[m];
    for (Eigen::Index i = 1; i < s.size(); ++i) EXPECT_GE(s(i - 1), s(i));
    const Matrix expected = d.bases[m] * s.array().pow(p).matrix().asDiagonal();
    EXPECT_LE((d.factors[m] - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(WeightedHosvd, MatchesIndependentStHosvdOracle) {
  const DenseTensor t = random_tensor({7, 6, 5}, 4);
  for (const Shape& ranks : {Shape{2, 2, 2}, Shape{3, 4, 2}, Shape{7, 1, 5}}) {
    const DenseTensor ours = tucker_reconstruct(weighted_hosvd(t, ranks, 1.0 / 3.0));
    EXPECT_LT(relative_error(ours, st_hosvd_oracle(t, ranks)), 1e-10);
  }
}

TEST(WeightedHosvd, FirstModeSigmasAreSingularValuesOfUnfolding) {
  const DenseTensor t = random_tensor({5, 4, 3}, 5);
  const TuckerTensor d = weighted_hosvd(t, Shape{3, 2, 2}, 1.0 / 3.0);
  Eigen::JacobiSVD<Matrix> svd(matricize(t, 0));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(d.sigmas[0](i), svd.singularValues()(i), 1e-12);
}

TEST(WeightedHosvd, RankOneSigmaIsNorm) {
  std::mt19937_64 rng(6);
  const Matrix a = stm::testing::random_matrix(4, 1, rng), b = stm::testing::random_matrix(3, 1, rng),
               c = stm::testing::random_matrix(5, 1, rng);
  DenseTensor t(Shape{1, 1, 1}, {1.0});
  t = mode_product(mode_product(mode_product(t, a, 0), b, 1), c, 2);
  const TuckerTensor d = weighted_hosvd(t, Shape{1, 1, 1}, 1.0 / 3.0);
  const double norm = frobenius_norm(t);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_NEAR(d.sigmas[m](0), norm, 1e-12 * norm);
  EXPECT_LT(relative_error(tucker_reconstruct(d), t), 1e-12);
}

TEST(WeightedHosvd, PowerOnlyRescales) {
  const DenseTensor t = random_tensor({5, 6, 4}, 7);
  const Shape ranks{3, 3, 3};
  const TuckerTensor a = weighted_hosvd(t, ranks, 0.0);
  const TuckerTensor b = weighted_hosvd(t, ranks, 0.7);
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_TRUE(bitwise_equal(a.bases[m], b.bases[m]));
    const Matrix ua = a.factors[m] * a.sigmas[m].array().pow(-0.0).matrix().asDiagonal();
    const Matrix ub = b.factors[m] * b.sigmas[m].array().pow(-0.7).matrix().asDiagonal();
    EXPECT_LE((ua - ub).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_LT(relative_error(tucker_reconstruct(a), tucker_reconstruct(b)), 1e-12);
}

TEST(WeightedHosvd, SignFixIsBitwiseDeterministic) {
  const DenseTensor t = random_tensor({8, 7, 6}, 8);
  const TuckerTensor a = weighted_hosvd(t, Shape{3, 3, 3}, 1.0 / 3.0);
  const TuckerTensor b = weighted_hosvd(t, Shape{3, 3, 3}, 1.0 / 3.0);
  EXPECT_EQ(a.core, b.core);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_TRUE(bitwise_equal(a.factors[m], b.factors[m]));
}

TEST(WeightedHosvd, NegatedTensorKeepsBases) {
  const DenseTensor t = random_tensor({5, 4, 3}, 9);
  std::vector<double> neg(t.values().begin(), t.values().end());
  for (double& v : neg) v = -v;
  const TuckerTensor a = weighted_hosvd(t, Shape{2, 2, 2}, 0.5);
  const TuckerTensor b = weighted_hosvd(DenseTensor(t.shape(), neg), Shape{2, 2, 2}, 0.5);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_LE((a.bases[m] - b.bases[m]).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t i = 0; i < a.core.size(); ++i)
    EXPECT_NEAR(a.core.data()[i], -b.core.data()[i], 1e-12);
}

TEST(WeightedHosvd, RankDeficientDirectionsGetUnitWeight) {
  // Exact rank (2,2,2) decomposed at (3,3,3): the third direction per mode is null.
  const DenseTensor t = low_rank_tensor({5, 5, 5}, {2, 2, 2}, 10);
  const TuckerTensor d = weighted_hosvd(t, Shape{3, 3, 3}, 0.5);
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_LT(d.sigmas[m](2), kSigmaFloor * d.sigmas[m](0) * 10);
    EXPECT_LE((d.factors[m].col(2) - d.bases[m].col(2)).cwiseAbs().maxCoeff(), 1e-12);
    expect_orthonormal(d.bases[m]);
  }
  EXPECT_LT(relative_error(tucker_reconstruct(d), t), 1e-12);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t idx[] = {2, j, k};
      EXPECT_EQ(d.core(idx), 0.0);
    }
}

TEST(WeightedHosvd, TuckerInputMatchesDensePath) {
  const DenseTensor t = low_rank_tensor({9, 8, 7}, {4, 4, 4}, 11);
  const TuckerTensor full = weighted_hosvd(t, Shape{4, 4, 4}, 0.0);
  for (const Shape& ranks : {Shape{4, 4, 4}, Shape{2, 3, 2}, Shape{1, 1, 1}}) {
    const TuckerTensor dense = weighted_hosvd(t, ranks, 1.0 / 3.0);
    const TuckerTensor native = weighted_hosvd(full, ranks, 1.0 / 3.0);
    for (std::size_t m = 0; m < 3; ++m) {
      EXPECT_LE((dense.bases[m] - native.bases[m]).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE((dense.sigmas[m] - native.sigmas[m]).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_LT(relative_error(tucker_reconstruct(native), tucker_reconstruct(dense)), 1e-10);
  }
}

TEST(WeightedHosvd, TuckerInputWithNonOrthogonalFactors) {
  std::mt19937_64 rng(12);
  TuckerTensor raw;
  raw.core = random_tensor({2, 3, 2}, 13);
  for (Eigen::Index n : {6, 5, 4}) {
    raw.factors.push_back(stm::testing::random_matrix(n, raw.core.dim(raw.factors.size()), rng));
  }
  const DenseTensor dense = tucker_reconstruct(raw);
  const TuckerTensor a = weighted_hosvd(raw, Shape{2, 2, 2}, 0.5);
  const TuckerTensor b = weighted_hosvd(dense, Shape{2, 2, 2}, 0.5);
  EXPECT_LT(relative_error(tucker_reconstruct(a), tucker_reconstruct(b)), 1e-10);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_LE((a.bases[m] - b.bases[m]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(WeightedHosvd, Errors) {
  const DenseTensor t = random_tensor({3, 3}, 14);
  EXPECT_THROW(weighted_hosvd(t, Shape{4, 1}, 0.5), Error);
  EXPECT_THROW(weighted_hosvd(t, Shape{0, 1}, 0.5), Error);
  EXPECT_THROW(weighted_hosvd(t, Shape{1, 1, 1}, 0.5), Error);
  try {
    weighted_hosvd(DenseTensor(Shape{3, 3}), Shape{1, 1}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_tensor);
  }
}

TEST(FixColumnSigns, TieGoesToFirstRow) {
  Matrix u(3, 2);
  u << -0.5, 0.5, 0.5, -0.5, 0.1, 0.1;
  const Vector s = fix_column_signs(u);
  EXPECT_EQ(s(0), -1.0);
  EXPECT_EQ(s(1), 1.0);
  EXPECT_EQ(u(0, 0), 0.5);
  EXPECT_EQ(u(0, 1), 0.5);
}

TEST(CpAls, RecoversExactLowRankTensor) {
  std::mt19937_64 rng(20);
  KruskalTensor k;
  for (Eigen::Index n : {6, 5, 7}) k.factors.push_back(stm::testing::random_matrix(n, 2, rng));
  k.weights = Vector::Ones(2);
  const DenseTensor t = cp_reconstruct(k);
  const CpAlsResult res = cp_als(t, 2, {.max_iters = 2000, .tol = 1e-14});
  EXPECT_FALSE(res.degenerate);
  EXPECT_LT(res.relative_error(), 1e-6);
  EXPECT_LT(relative_error(cp_reconstruct(res.cp), t), 1e-6);
}

TEST(CpAls, ErrorHistoryMatchesReconstructionAndIsMonotone) {
  const DenseTensor t = random_tensor({5, 4, 6}, 21);
  const CpAlsResult res = cp_als(t, 3, {.max_iters = 50, .tol = 0.0});
  ASSERT_FALSE(res.error_history.empty());
  for (std::size_t i = 1; i < res.error_history.size(); ++i)
    EXPECT_LE(res.error_history[i], res.error_history[i - 1] + 1e-10);
  EXPECT_NEAR(res.relative_error(), relative_error(cp_reconstruct(res.cp), t), 1e-8);
}

TEST(CpAls, RankAboveModeSizeIsDeterministic) {
  const DenseTensor t = random_tensor({3, 3, 3}, 22);
  const CpAlsResult a = cp_als(t, 5, {.max_iters = 20});
  const CpAlsResult b = cp_als(t, 5, {.max_iters = 20});
  for (std::size_t m = 0; m < 3; ++m) EXPECT_TRUE(bitwise_equal(a.cp.factors[m], b.cp.factors[m]));
  EXPECT_LT(a.relative_error(), 1.0);
}

TEST(CpAls, Errors) {
  EXPECT_THROW(cp_als(DenseTensor(Shape{2, 2}), 1), Error);
  EXPECT_THROW(cp_als(random_tensor({2, 2}, 1), 0), Error);
}

TEST(TtSvd, FullRanksAreExact) {
  const DenseTensor t = random_tensor({4, 5, 3, 2}, 30);
  const TTTensor tt = tt_svd(t, Shape{4, 6, 2});
  EXPECT_EQ(tt.shape(), t.shape());
  EXPECT_LT(relative_error(tt_reconstruct(tt), t), 1e-12);
}

TEST(TtSvd, InfeasibleRanksAreClippedWithNotice) {
  const DenseTensor t = random_tensor({4, 4, 4}, 31);
  std::vector<std::string> notices;
  const TTTensor tt = tt_svd(t, Shape{100, 100}, &notices);
  EXPECT_EQ(tt.ranks(), (Shape{4, 4}));
  EXPECT_EQ(notices.size(), 2u);
  EXPECT_LT(relative_error(tt_reconstruct(tt), t), 1e-12);
}

TEST(TtSvd, CoresAreLeftOrthonormalAndSignFixed) {
  const DenseTensor t = random_tensor({5, 4, 3}, 32);
  const TTTensor tt = tt_svd(t, Shape{2, 2});
  for (std::size_t k = 0; k + 1 < tt.order(); ++k) {
    const DenseTensor& c = tt.cores[k];
    Eigen::Map<const Matrix> u(c.data(), static_cast<Eigen::Index>(c.dim(0) * c.dim(1)),
                               static_cast<Eigen::Index>(c.dim(2)));
    expect_orthonormal(u);
    expect_sign_fixed(u);
  }
  const TTTensor again = tt_svd(t, Shape{2, 2});
  for (std::size_t k = 0; k < tt.order(); ++k) EXPECT_EQ(tt.cores[k], again.cores[k]);
}

TEST(Conversions, TuckerToCpContractsToSameTensor) {
  const DenseTensor t = random_tensor({5, 4, 6}, 40);
  const TuckerTensor d = weighted_hosvd(t, Shape{2, 3, 2}, 1.0 / 3.0);
  const KruskalTensor k = tucker_to_cp(d);
  EXPECT_EQ(k.rank(), 12u);
  EXPECT_LT(relative_error(cp_reconstruct(k), tucker_reconstruct(d)), 1e-12);
}

TEST(Conversions, TtToCpContractsToSameTensor) {
  const DenseTensor t = random_tensor({4, 3, 5, 2}, 41);
  const TTTensor tt = tt_svd(t, Shape{2, 3, 2});
  const KruskalTensor k = tt_to_cp(tt);
  EXPECT_EQ(k.rank(), 12u);
  EXPECT_LT(relative_error(cp_reconstruct(k), tt_reconstruct(tt)), 1e-12);
}

TEST(Conversions, EquilibratedColumnsShareNorm) {
  const TuckerTensor d = weighted_hosvd(random_tensor({4, 5, 3}, 42), Shape{2, 2, 2}, 0.5);
  const KruskalTensor k = tucker_to_cp(d);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k.rank()); ++j) {
    const double n0 = k.factors[0].col(j).norm();
    const double g = std::abs(d.core.data()[j]) * d.factors[0].col(j % 2).norm() *
                     d.factors[1].col((j / 2) % 2).norm() * d.factors[2].col(j / 4).norm();
    EXPECT_NEAR(n0, std::cbrt(g), 1e-12);
    for (std::size_t m = 1; m < 3; ++m) {
      EXPECT_NEAR(k.factors[m].col(j).norm(), n0, 1e-12);
      expect_sign_fixed(k.factors[m].col(j));
    }
  }
}

TEST(Conversions, EquilibrateIsIdempotent) {
  std::mt19937_64 rng(43);
  KruskalTensor k;
  for (Eigen::Index n : {3, 4, 2}) k.factors.push_back(stm::testing::random_matrix(n, 3, rng));
  k.weights = Vector::LinSpaced(3, -2.0, 3.0);
  const KruskalTensor once = equilibrate(k);
  const KruskalTensor twice = equilibrate(once);
  EXPECT_LT(relative_error(cp_reconstruct(once), cp_reconstruct(k)), 1e-12);
  for (std::size_t m = 0; m < 3; ++m)
    EXPECT_LE((once.factors[m] - twice.factors[m]).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(once.weights, Vector::Ones(3));
}
