#include "nbw/errors.hpp"
#include "nbw/net.hpp"
#include "nbw/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace nbw;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& r) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.normal();
  return m;
}

double max_rel_err(const Vector& a, const Vector& b) {
  double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST(RatioNetInit, BiasesZeroAndDeterministic) {
  auto a = RatioNet::init({3, 1}, Activation::relu, 5);
  auto b = RatioNet::init({3, 1}, Activation::relu, 5);
  EXPECT_EQ(a.layers()[0].bias(0), 0.0);
  EXPECT_EQ(a.flat_parameters(), b.flat_parameters());
  double bound = 1.0 / std::sqrt(3.0);
  EXPECT_LE(a.layers()[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_NE(a.flat_parameters(), RatioNet::init({3, 1}, Activation::relu, 6).flat_parameters());
}

TEST(RatioNetInit, ParameterCount) {
  std::vector<std::size_t> dims = {2, 100, 100, 100, 1};
  std::size_t expected = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) expected += dims[i] * dims[i + 1] + dims[i + 1];
  auto net = RatioNet::init(dims, Activation::relu, 0);
  EXPECT_EQ(expected, 20601u);
  EXPECT_EQ(net.parameter_count(), expected);
  EXPECT_EQ(static_cast<std::size_t>(net.flat_parameters().size()), expected);
}

TEST(RatioNetInit, RejectsBadDims) {
  EXPECT_THROW(RatioNet::init({3}, Activation::relu, 0), ConfigError);
  EXPECT_THROW(RatioNet::init({3, 2}, Activation::relu, 0), ConfigError);
  EXPECT_THROW(RatioNet::init({0, 1}, Activation::relu, 0), ConfigError);
}

TEST(Forward, SingleAffineLayer) {
  DenseLayer l{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 0.5)};
  RatioNet net({1, 1}, Activation::relu, {l});
  EXPECT_DOUBLE_EQ(net.forward(Matrix::Constant(1, 1, 1.0))(0), 2.5);
}

TEST(Forward, AllZeroNetGivesZero) {
  auto net = RatioNet::init({3, 4, 1}, Activation::tanh, 0);
  net.set_flat_parameters(Vector::Zero(static_cast<Eigen::Index>(net.parameter_count())));
  RandomStream r(1);
  EXPECT_EQ(net.forward(random_matrix(5, 3, r)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, TwoLayerHandComposition) {
  // h = relu(W1 x + b1), out = w2 . h + b2 written out in scalars.
  Matrix w1(2, 2);
  w1 << 1.0, -2.0, 0.5, 0.25;
  Vector b1(2);
  b1 << 0.1, -0.3;
  Matrix w2(1, 2);
  w2 << 3.0, -1.5;
  Vector b2 = Vector::Constant(1, 0.7);
  for (Activation act : {Activation::relu, Activation::tanh}) {
    RatioNet net({2, 2, 1}, act, {{w1, b1}, {w2, b2}});
    auto f = [act](double z) { return act == Activation::relu ? std::max(0.0, z) : std::tanh(z); };
    Matrix x(2, 2);
    x << 0.4, -0.2, -1.0, 0.6;
    Vector out = net.forward(x);
    for (int i = 0; i < 2; ++i) {
      double h0 = f(1.0 * x(i, 0) - 2.0 * x(i, 1) + 0.1);
      double h1 = f(0.5 * x(i, 0) + 0.25 * x(i, 1) - 0.3);
      EXPECT_NEAR(out(i), 3.0 * h0 - 1.5 * h1 + 0.7, 1e-15);
    }
  }
}

TEST(Forward, WrongWidthThrows) {
  auto net = RatioNet::init({3, 1}, Activation::relu, 0);
  EXPECT_THROW(net.forward(Matrix::Zero(2, 2)), ConfigError);
}

TEST(FlatParameters, RoundTripAndLayout) {
  auto net = RatioNet::init({2, 3, 1}, Activation::tanh, 9);
  Vector p = net.flat_parameters();
  // First layer weight row-major then bias.
  EXPECT_EQ(p(1), net.layers()[0].weight(0, 1));
  EXPECT_EQ(p(6), net.layers()[0].bias(0));
  p.array() += 1.0;
  net.set_flat_parameters(p);
  EXPECT_EQ(net.flat_parameters(), p);
  EXPECT_THROW(net.set_flat_parameters(Vector::Zero(3)), ConfigError);
}

TEST(Serialization, JsonAndFileRoundTrip) {
  auto net = RatioNet::init({4, 5, 3, 1}, Activation::tanh, 2);
  auto back = RatioNet::from_json(net.to_json());
  EXPECT_EQ(back.flat_parameters(), net.flat_parameters());
  EXPECT_EQ(back.activation(), Activation::tanh);
  auto path = std::filesystem::temp_directory_path() / "nbw_net.json";
  net.save(path);
  auto loaded = RatioNet::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.flat_parameters(), net.flat_parameters());
  EXPECT_EQ(loaded.dims(), net.dims());
  EXPECT_THROW(RatioNet::from_json(nlohmann::json::parse(R"({"dims":[2,1]})")), ConfigError);
}

TEST(BackwardAlpha, SymmetricCancellation) {
  RatioNet net({1, 1}, Activation::relu, {{Matrix::Zero(1, 1), Vector::Zero(1)}});
  Matrix one = Matrix::Constant(1, 1, 1.0);
  auto g = backward_alpha(net, one, one, AlphaParam(0.5));
  EXPECT_NEAR(g.gradient.cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(g.terms.loss, 4.0);
  EXPECT_DOUBLE_EQ(g.terms.estimate, 0.0);
}

TEST(BackwardAlpha, MatchesFiniteDifferencesTanh) {
  RandomStream r(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t d = 1 + r.below(4);
    auto net = RatioNet::init({d, 6, 5, 1}, Activation::tanh, 100 + trial);
    Matrix p = random_matrix(7, d, r), q = random_matrix(5, d, r);
    for (double a : {0.2, 0.5, 0.8}) {
      auto g = backward_alpha(net, p, q, AlphaParam(a));
      auto fd = finite_diff_grad(net, p, q, AlphaParam(a), 1e-5);
      EXPECT_LT(max_rel_err(g.gradient, fd), 1e-5);
    }
  }
}

TEST(BackwardAlpha, WeightedMatchesFiniteDifferences) {
  RandomStream r(3);
  auto net = RatioNet::init({2, 4, 1}, Activation::tanh, 1);
  Matrix p = random_matrix(6, 2, r), q = random_matrix(6, 2, r);
  std::vector<double> w = {0.5, 1.5, 2.0, 0.0, 1.0, 1.0};
  auto g = backward_alpha(net, p, q, AlphaParam(0.3), w);
  auto fd = finite_diff_grad(net, p, q, AlphaParam(0.3), 1e-5, w);
  EXPECT_LT(max_rel_err(g.gradient, fd), 1e-5);
}

TEST(BackwardAlpha, OneParameterExact) {
  // T(x) = w x with no hidden layer; bias fixed at its value in the flat vector.
  RatioNet net({1, 1}, Activation::relu, {{Matrix::Constant(1, 1, 0.3), Vector::Zero(1)}});
  Matrix p(2, 1), q(3, 1);
  p << 0.5, -1.0;
  q << 1.0, 0.2, -0.4;
  const double a = 0.5, w = 0.3;
  // dL/dw = (1/a) mean_q(a x e^{a w x}) + (1/(1-a)) mean_p((a-1) x e^{(a-1) w x}).
  double dq = 0, dp = 0;
  for (int i = 0; i < 3; ++i) dq += q(i) * std::exp(a * w * q(i)) / 3.0;
  for (int i = 0; i < 2; ++i) dp -= p(i) * std::exp((a - 1) * w * p(i)) / 2.0;
  auto g = backward_alpha(net, p, q, AlphaParam(a));
  auto fd = finite_diff_grad(net, p, q, AlphaParam(a), 1e-5);
  EXPECT_NEAR(g.gradient(0), dq + dp, 1e-12);
  EXPECT_NEAR(fd(0), g.gradient(0), 1e-9);
}

TEST(BackwardAlpha, OverflowRaisesDivergenceError) {
  RatioNet net({1, 1}, Activation::relu, {{Matrix::Constant(1, 1, 1.0), Vector::Zero(1)}});
  Matrix big = Matrix::Constant(1, 1, 2000.0);
  EXPECT_THROW(backward_alpha(net, big, big, AlphaParam(0.5)), DivergenceError);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  auto net = RatioNet::init({1, 1}, Activation::tanh, 0);
  Matrix x = Matrix::Ones(1, 1);
  EXPECT_THROW(finite_diff_grad(net, x, x, AlphaParam(0.5), 0.0), ConfigError);
}

TEST(Backprop, LinearInCotangent) {
  RandomStream r(8);
  auto net = RatioNet::init({3, 4, 1}, Activation::relu, 4);
  Matrix x = random_matrix(5, 3, r);
  Vector c1 = random_matrix(5, 1, r), c2 = random_matrix(5, 1, r);
  Vector lhs = backprop(net, x, c1 + 2.0 * c2);
  Vector rhs = backprop(net, x, c1) + 2.0 * backprop(net, x, c2);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Adam, FirstStepIsMinusLearningRate) {
  RatioNet net({1, 1}, Activation::relu, {{Matrix::Constant(1, 1, 1.0), Vector::Zero(1)}});
  auto st = AdamState::for_net(net, 0.01);
  Vector g(2);
  g << 3.7, -0.2;
  adam_step(st, net, g);
  Vector p = net.flat_parameters();
  EXPECT_LT(std::abs((p(0) - 1.0) + 0.01), 0.01 * 1e-6);
  EXPECT_LT(std::abs((p(1) - 0.0) - 0.01), 0.01 * 1e-6);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto net = RatioNet::init({2, 3, 1}, Activation::tanh, 1);
  Vector before = net.flat_parameters();
  auto st = AdamState::for_net(net, 0.1);
  adam_step(st, net, Vector::Zero(before.size()));
  EXPECT_EQ(net.flat_parameters(), before);
}

TEST(Adam, TwoStepsMatchUnrolledRecurrence) {
  RatioNet net({1, 1}, Activation::relu, {{Matrix::Constant(1, 1, 0.5), Vector::Zero(1)}});
  auto st = AdamState::for_net(net, 0.05);
  Vector g(2);
  g << 0.8, 0.8;
  adam_step(st, net, g);
  adam_step(st, net, g);
  // Scalar reference.
  double theta = 0.5, m = 0, v = 0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05, gr = 0.8;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * gr;
    v = b2 * v + (1 - b2) * gr * gr;
    double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }
  EXPECT_NEAR(net.flat_parameters()(0), theta, 1e-14);
  EXPECT_EQ(st.step, 2u);
}

TEST(Adam, NonFiniteGradientThrows) {
  auto net = RatioNet::init({1, 1}, Activation::relu, 0);
  auto st = AdamState::for_net(net, 0.1);
  Vector g(2);
  g << std::nan(""), 0.0;
  EXPECT_THROW(adam_step(st, net, g), DivergenceError);
}
