#include "pbes/numerics.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pbes/errors.hpp"

namespace {

using pbes::DataMatrix;

TEST(DataMatrixTest, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(DataMatrix(0, 2, {}), pbes::ValidationError);
  EXPECT_THROW(DataMatrix(1, 0, {}), pbes::ValidationError);
  EXPECT_THROW(DataMatrix(1, 2, {1.0}), pbes::ValidationError);
  EXPECT_THROW(DataMatrix(1, 2, {1.0, std::nan("")}), pbes::ValidationError);
  EXPECT_THROW(DataMatrix(1, 1, {INFINITY}), pbes::ValidationError);
  EXPECT_THROW(DataMatrix::from_rows({{1.0, 2.0}, {3.0}}), pbes::ValidationError);
}

TEST(MeanVectorTest, HandExamples) {
  EXPECT_EQ(pbes::mean_vector(DataMatrix::from_rows({{0, 0}, {2, 0}})), (std::vector<double>{1, 0}));
  EXPECT_EQ(pbes::mean_vector(DataMatrix::from_rows({{7}})), (std::vector<double>{7}));
}

TEST(MeanVectorTest, MatchesColumnSumOracle) {
  pbes::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_matrix(5, 3, rng, 10.0);
    const auto got = pbes::mean_vector(x);
    const auto want = oracle::column_means(x);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got[j], want[j], 1e-12);
  }
}

TEST(CovarianceTest, HandExamples) {
  const auto c = pbes::covariance(DataMatrix::from_rows({{0, 0}, {2, 0}}));
  EXPECT_EQ(c, pbes::Matrix(2, 2, {1, 0, 0, 0}));
  const auto single = pbes::covariance(DataMatrix::from_rows({{3, -1, 4}}));
  EXPECT_EQ(single, pbes::Matrix(3, 3));
}

TEST(CovarianceTest, MatchesDoubleLoopOracleAndIsPsd) {
  pbes::Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_matrix(6, 2, rng, 5.0);
    const auto got = pbes::covariance(x);
    const auto want = oracle::covariance(x);
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) EXPECT_NEAR(got(a, b), want[a][b], 1e-12);
    }
    EXPECT_EQ(got(0, 1), got(1, 0));
    EXPECT_GE(got(0, 0) * got(1, 1) - got(0, 1) * got(1, 0), -1e-12);
  }
}

TEST(CovarianceTest, RowPermutationChangesNothingMeasurable) {
  pbes::Rng rng(13);
  const auto x = oracle::random_matrix(9, 4, rng);
  std::vector<std::size_t> perm{8, 3, 0, 5, 1, 7, 2, 6, 4};
  const auto a = pbes::covariance(x);
  const auto b = pbes::covariance(x.select(perm));
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-14);
}

TEST(SignConventionTest, LargestMagnitudePositiveEarliestOnTies) {
  std::vector<double> v{0.1, -0.9, 0.3};
  pbes::normalize_sign(v);
  EXPECT_EQ(v, (std::vector<double>{-0.1, 0.9, -0.3}));
  std::vector<double> tie{-0.5, 0.5};
  pbes::normalize_sign(tie);
  EXPECT_EQ(tie, (std::vector<double>{0.5, -0.5}));
}

TEST(PrincipalDirectionsTest, AxisAlignedExample) {
  const auto basis = pbes::principal_directions(DataMatrix::from_rows({{0, 0}, {2, 0}}), 1);
  ASSERT_EQ(basis.directions.size(), 1u);
  EXPECT_NEAR(basis.directions[0][0], 1.0, 1e-15);
  EXPECT_NEAR(basis.directions[0][1], 0.0, 1e-15);
  EXPECT_EQ(basis.source, pbes::DirectionSource::pca);
  EXPECT_EQ(basis.rank, 1u);
}

TEST(PrincipalDirectionsTest, RankZeroUsesCanonicalAxes) {
  const auto basis = pbes::principal_directions(DataMatrix::from_rows({{4, 4}, {4, 4}, {4, 4}}), 2);
  EXPECT_EQ(basis.source, pbes::DirectionSource::fallback);
  EXPECT_EQ(basis.rank, 0u);
  EXPECT_EQ(basis.directions[0], (std::vector<double>{1, 0}));
  EXPECT_EQ(basis.directions[1], (std::vector<double>{0, 1}));
}

TEST(PrincipalDirectionsTest, PastRankCyclesInformativeDirections) {
  // Three collinear-in-a-plane points: rank 2 in R^3.
  const auto x = DataMatrix::from_rows({{0, 0, 0}, {1, 2, 0}, {3, 1, 0}, {-1, 4, 0}});
  const auto basis = pbes::principal_directions(x, 5);
  EXPECT_EQ(basis.rank, 2u);
  EXPECT_EQ(basis.source, pbes::DirectionSource::fallback);
  EXPECT_EQ(basis.directions[2], basis.directions[0]);
  EXPECT_EQ(basis.directions[3], basis.directions[1]);
  EXPECT_EQ(basis.directions[4], basis.directions[0]);
}

TEST(PrincipalDirectionsTest, MatchesClassicalJacobiOracle) {
  pbes::Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::random_matrix(5, 3, rng, 3.0);
    const auto basis = pbes::principal_directions(x, 3);
    const auto ref = oracle::classical_jacobi(oracle::covariance(x));
    ASSERT_EQ(basis.rank, 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(basis.eigenvalues[i], ref.values[i], 1e-10);
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(basis.directions[i][k], ref.vectors[i][k], 1e-8);
    }
  }
}

TEST(PrincipalDirectionsTest, EigenResidualOrthonormalityAndPurity) {
  pbes::Rng rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(12);
    const std::size_t d = 1 + rng.uniform_index(6);
    const auto x = oracle::random_matrix(n, d, rng, 4.0);
    const auto cov = pbes::covariance(x);
    const auto basis = pbes::principal_directions(x, d);
    const std::size_t informative = std::min(d, basis.rank);
    for (std::size_t i = 0; i < informative; ++i) {
      const auto& v = basis.directions[i];
      const double lambda = basis.eigenvalues[i];
      EXPECT_NEAR(pbes::norm2(v), 1.0, 1e-9);
      for (std::size_t r = 0; r < d; ++r) {
        EXPECT_LT(std::fabs(pbes::dot(cov.row(r), v) - lambda * v[r]), 1e-8 * (1.0 + lambda));
      }
      for (std::size_t j = 0; j < i; ++j) EXPECT_LT(std::fabs(pbes::dot(v, basis.directions[j])), 1e-8);
    }
    const auto again = pbes::principal_directions(x, d);
    EXPECT_EQ(again.directions, basis.directions);
  }
}

TEST(ProjectTest, AxisExamplesAndErrors) {
  const auto x = DataMatrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(pbes::project(x, std::vector<double>{1, 0}), (std::vector<double>{1, 3}));
  EXPECT_EQ(pbes::project(x, std::vector<double>{0, 1}), (std::vector<double>{2, 4}));
  EXPECT_THROW(pbes::project(x, std::vector<double>{1, 0, 0}), pbes::ValidationError);
  EXPECT_THROW(pbes::project(x, std::vector<double>{1, 1}), pbes::ValidationError);
}

TEST(ProjectTest, MatchesNaiveDotAndIsLinear) {
  pbes::Rng rng(16);
  const auto x = oracle::random_matrix(7, 4, rng, 2.0);
  const auto basis = pbes::random_unit_directions(4, 2, rng);
  const auto& u = basis.directions[0];
  const auto& v = basis.directions[1];
  const auto pu = pbes::project(x, u);
  const auto pv = pbes::project(x, v);
  for (std::size_t i = 0; i < 7; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += x(i, j) * u[j];
    EXPECT_NEAR(pu[i], s, 1e-12);
  }
  // Combination normalized to unit length: projection is linear in v.
  const double a = 0.6, b = -0.3;
  std::vector<double> w(4);
  for (std::size_t j = 0; j < 4; ++j) w[j] = a * u[j] + b * v[j];
  const double len = pbes::norm2(w);
  for (double& c : w) c /= len;
  const auto pw = pbes::project(x, w);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(pw[i], (a * pu[i] + b * pv[i]) / len, 1e-12);
}

TEST(RandomDirectionsTest, OneDimensionIsPlusOne) {
  pbes::Rng rng(3);
  const auto basis = pbes::random_unit_directions(1, 3, rng);
  for (const auto& v : basis.directions) EXPECT_EQ(v, (std::vector<double>{1.0}));
}

TEST(RandomDirectionsTest, UnitNormAndSeedDeterminism) {
  pbes::Rng a(99), b(99), c(100);
  const auto da = pbes::random_unit_directions(5, 4, a);
  const auto db = pbes::random_unit_directions(5, 4, b);
  const auto dc = pbes::random_unit_directions(5, 4, c);
  EXPECT_EQ(da.source, pbes::DirectionSource::random);
  for (const auto& v : da.directions) EXPECT_NEAR(pbes::norm2(v), 1.0, 1e-9);
  EXPECT_EQ(da.directions, db.directions);
  EXPECT_NE(da.directions, dc.directions);
}

TEST(JacobiTest, DiagonalAndZeroMatrices) {
  const auto diag = pbes::jacobi_eigen(pbes::Matrix(3, 3, {1, 0, 0, 0, 5, 0, 0, 0, 3}));
  EXPECT_EQ(diag.values, (std::vector<double>{5, 3, 1}));
  const auto zero = pbes::jacobi_eigen(pbes::Matrix(2, 2));
  EXPECT_EQ(zero.values, (std::vector<double>{0, 0}));
}

}  // namespace
