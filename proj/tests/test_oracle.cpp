#include "nbw/errors.hpp"
#include "nbw/oracle.hpp"
#include "nbw/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace nbw;

namespace {

Matrix diag1(double v) { return Matrix::Constant(1, 1, v); }

Matrix random_pd(std::size_t d, RandomStream& r) {
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = r.normal();
  return a * a.transpose() / static_cast<double>(d) + 0.3 * Matrix::Identity(d, d);
}

}  // namespace

TEST(ZeroMeanGaussian, RejectsInvalidCovariance) {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(ZeroMeanGaussian{asym}, ConfigError);
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(ZeroMeanGaussian{indefinite}, ConfigError);
}

TEST(LogDensityRatio, EqualIsZero) {
  RandomStream r(1);
  ZeroMeanGaussian g(random_pd(3, r));
  for (int i = 0; i < 5; ++i) {
    Vector x(3);
    for (int j = 0; j < 3; ++j) x(j) = r.normal();
    EXPECT_NEAR(log_density_ratio(g, g, x), 0.0, 1e-14);
  }
}

TEST(LogDensityRatio, ScalarExample) {
  ZeroMeanGaussian q(diag1(1.0)), p(diag1(4.0));
  EXPECT_NEAR(log_density_ratio(q, p, Vector::Zero(1)), 0.5 * std::log(4.0), 1e-15);
  EXPECT_NEAR(log_density_ratio(q, p, Vector::Zero(1)), 0.693147, 1e-6);
  Vector x = Vector::Constant(1, 1.5);
  // 0.5 log 4 - 0.5 x^2 (1 - 1/4)
  EXPECT_NEAR(log_density_ratio(q, p, x), 0.5 * std::log(4.0) - 0.5 * 2.25 * 0.75, 1e-14);
}

TEST(LogDensityRatio, DimensionMismatch) {
  ZeroMeanGaussian q(diag1(1.0)), p(Matrix::Identity(2, 2));
  EXPECT_THROW(log_density_ratio(q, p, Vector::Zero(1)), ConfigError);
}

TEST(GaussHermite, IntegratesPolynomials) {
  auto rule = gauss_hermite(200);
  ASSERT_EQ(rule.nodes.size(), 200u);
  double s0 = 0, s2 = 0, s4 = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    double x = rule.nodes[i], w = rule.weights[i];
    s0 += w;
    s2 += w * x * x;
    s4 += w * x * x * x * x;
  }
  const double sp = std::sqrt(M_PI);
  EXPECT_NEAR(s0, sp, 1e-12);
  EXPECT_NEAR(s2, sp / 2, 1e-12);
  EXPECT_NEAR(s4, 3 * sp / 4, 1e-12);
}

TEST(Quadrature, RatioIntegratesToOne) {
  // E_P[q/p] = 1, which is alpha -> 0 of E_P[r^(1-alpha)]; use alpha tiny via the
  // divergence identity at alpha = 1e-6 instead: (E - 1)/(a(a-1)) stays finite.
  ZeroMeanGaussian q(diag1(1.0)), p(diag1(1.7));
  auto rule = gauss_hermite(200);
  double s = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    Vector x = Vector::Constant(1, std::sqrt(2.0 * 1.7) * rule.nodes[i]);
    s += rule.weights[i] * std::exp(log_density_ratio(q, p, x));
  }
  EXPECT_NEAR(s / std::sqrt(M_PI), 1.0, 1e-8);
}

TEST(AlphaDivergence, EqualIsZero) {
  RandomStream r(2);
  ZeroMeanGaussian g(random_pd(4, r));
  for (double a : {-1.0, 0.3, 0.5, 2.0}) EXPECT_NEAR(alpha_divergence(g, g, AlphaParam(a)), 0.0, 1e-13);
}

TEST(AlphaDivergence, ShiftedHellinger) {
  Matrix c = diag1(1.0);
  Vector mq = Vector::Zero(1), mp = Vector::Constant(1, 1.0);
  double expected = 4.0 * (1.0 - std::exp(-1.0 / 8.0));
  EXPECT_NEAR(expected, 0.47001239, 1e-8);
  EXPECT_NEAR(alpha_divergence_shifted(c, mq, mp, AlphaParam(0.5)), expected, 1e-14);
  EXPECT_NEAR(alpha_divergence_shifted_quadrature(c, mq, mp, AlphaParam(0.5)), expected, 1e-10);
}

TEST(AlphaDivergence, ClosedFormMatchesQuadratureTwoDim) {
  GaussianSpec s{2, 0.8};
  ZeroMeanGaussian q(Matrix::Identity(2, 2)), p(s.covariance());
  double cf = alpha_divergence(q, p, AlphaParam(0.5));
  double qd = alpha_divergence_quadrature(q, p, AlphaParam(0.5));
  EXPECT_NEAR(cf, qd, 1e-8);
  EXPECT_NEAR(alpha_information(s, AlphaParam(0.5)), cf, 1e-14);
}

TEST(AlphaDivergence, NonNegativeOnRandomGrid) {
  RandomStream r(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t d = 1 + r.below(4);
    ZeroMeanGaussian q(random_pd(d, r)), p(random_pd(d, r));
    for (double a : {-0.5, 0.2, 0.5, 0.8, 1.5}) {
      double v = alpha_divergence(q, p, AlphaParam(a));
      EXPECT_GT(v, 0.0);
    }
  }
}

TEST(AlphaDivergence, InfiniteWhenNotPd) {
  GaussianSpec s{5, 0.8};
  EXPECT_EQ(alpha_information(s, AlphaParam(-1.0)), std::numeric_limits<double>::infinity());
  EXPECT_EQ(alpha_information(s, AlphaParam(2.0)), std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isfinite(alpha_information(s, AlphaParam(0.5))));
}

TEST(AlphaInformation, ZeroAtRhoZeroAndMonotone) {
  EXPECT_NEAR(alpha_information({3, 0.0}, AlphaParam(0.5)), 0.0, 1e-15);
  for (double a : {0.2, 0.5, 0.8}) {
    double prev = 0.0;
    for (double rho = 0.05; rho < 0.95; rho += 0.05) {
      double v = alpha_information({3, rho}, AlphaParam(a));
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(GaussianSpec, Validation) {
  EXPECT_THROW((GaussianSpec{0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((GaussianSpec{3, 1.0}.validate()), ConfigError);
  EXPECT_THROW((GaussianSpec{3, -0.5}.validate()), ConfigError);
  EXPECT_NO_THROW((GaussianSpec{3, -0.4}.validate()));
}
