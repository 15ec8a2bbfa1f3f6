#include "nbw/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace nbw;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
  auto r = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5u);
  EXPECT_EQ(r[1], 0xe169c58du);
  EXPECT_EQ(r[2], 0xbc57ac4cu);
  EXPECT_EQ(r[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  auto r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(r[0], 0x408f276du);
  EXPECT_EQ(r[1], 0x41c83b0eu);
  EXPECT_EQ(r[2], 0xa20bc7c6u);
  EXPECT_EQ(r[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  auto r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(r[0], 0xd16cfe09u);
  EXPECT_EQ(r[1], 0x94fdccebu);
  EXPECT_EQ(r[2], 0x5001e420u);
  EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(RandomStream, DeterministicPerSeedAndStream) {
  RandomStream a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs_c |= x != c.next_u64();
    differs_d |= x != d.next_u64();
  }
  EXPECT_TRUE(differs_c);
  EXPECT_TRUE(differs_d);
}

TEST(RandomStream, UniformRange) {
  RandomStream r(1);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    double v = r.uniform_open();
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(RandomStream, BelowIsUnbiasedAndInRange) {
  RandomStream r(2);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    auto k = r.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  // Each count ~ Binomial(n, 1/7); 5 sd ~ 460.
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 460.0);
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(3);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(RandomStream, GammaMeanAndVariance) {
  for (double shape : {0.5, 1.5, 7.0}) {
    RandomStream r(4);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      double x = r.gamma(shape);
      ASSERT_GT(x, 0.0);
      s += x;
      s2 += x * x;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, shape, 5.0 * std::sqrt(shape / n));
    EXPECT_NEAR(var, shape, 0.05 * shape + 0.02);
  }
}

TEST(RandomStream, PoissonMeanSmallAndLarge) {
  for (double mu : {0.0, 0.7, 4.0, 45.0, 300.0}) {
    RandomStream r(5);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      double k = static_cast<double>(r.poisson(mu));
      s += k;
      s2 += k * k;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, mu, 5.0 * std::sqrt(mu / n) + 1e-12);
    EXPECT_NEAR(var, mu, 0.05 * mu + 1e-12);
  }
}

TEST(RandomStream, NoncentralChiSquaredMean) {
  // E = df + noncentrality, Var = 2(df + 2 noncentrality).
  RandomStream r(6);
  const double df = 3.0, mu = 9.5;
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += r.noncentral_chi_squared(df, mu);
  EXPECT_NEAR(s / n, df + mu, 5.0 * std::sqrt(2.0 * (df + 2 * mu) / n));
}

TEST(RandomStream, PermutationIsPermutation) {
  RandomStream r(7);
  auto p = r.permutation(1000);
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(1000);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(sorted, iota);
  EXPECT_NE(p, iota);
  EXPECT_EQ(RandomStream(9).permutation(1), std::vector<std::size_t>{0});
  EXPECT_TRUE(RandomStream(9).permutation(0).empty());
}

TEST(DeriveSeed, SeparatesTags) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}
