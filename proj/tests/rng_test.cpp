#include "pbes/rng.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

namespace {

TEST(RngTest, RawStreamIsTheStandardEngine) {
  // mt19937_64's 10000th output for the default seed is fixed by the standard.
  pbes::Rng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next_u64();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(RngTest, SameSeedSameDraws) {
  pbes::Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.uniform_index(13), b.uniform_index(13));
  }
}

TEST(RngTest, UniformIndexStaysInRangeAndCoversIt) {
  pbes::Rng rng(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(RngTest, NormalMoments) {
  pbes::Rng rng(2);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(RngTest, DerivedSeedsDependOnBothInputs) {
  EXPECT_EQ(pbes::derive_seed(1, 2), pbes::derive_seed(1, 2));
  EXPECT_NE(pbes::derive_seed(1, 2), pbes::derive_seed(1, 3));
  EXPECT_NE(pbes::derive_seed(1, 2), pbes::derive_seed(2, 2));
  EXPECT_NE(pbes::derive_seed(1, 2), pbes::derive_seed(2, 1));
}

}  // namespace
