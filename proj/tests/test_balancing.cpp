#include "nbw/balancing.hpp"
#include "nbw/errors.hpp"
#include "nbw/rng.hpp"
#include "nbw/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace nbw;

namespace {

RatioNet shifted(const RatioNet& net, double c) {
  auto layers = net.layers();
  layers.back().bias(0) += c;
  return RatioNet(net.dims(), net.activation(), layers);
}

}  // namespace

TEST(ComputeWeights, ConstantCriticGivesOnes) {
  auto data = gen_gaussian({2, 0.3}, 50, 1);
  auto lay = per_coordinate_layout(2);
  RatioNet net({2, 1}, Activation::relu, {{Matrix::Zero(1, 2), Vector::Constant(1, 3.7)}});
  auto w = compute_weights(net, data, lay);
  EXPECT_LT((w.values.array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(ComputeWeights, MeanOneAndShiftInvariant) {
  auto data = gen_gaussian({3, 0.5}, 200, 2);
  auto lay = per_coordinate_layout(3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto net = RatioNet::init({3, 8, 1}, Activation::tanh, s);
    auto w = compute_weights(net, data, lay);
    EXPECT_NEAR(w.values.mean(), 1.0, 1e-12);
    EXPECT_GE(w.values.minCoeff(), 0.0);
    for (double c : {-800.0, 5.0, 900.0}) {
      auto w2 = compute_weights(shifted(net, c), data, lay);
      EXPECT_LT((w2.values - w.values).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_TRUE(w2.values.allFinite());
    }
  }
}

TEST(ComputeWeights, MatchesDirectFormula) {
  auto data = gen_gaussian({2, 0.5}, 30, 3);
  auto lay = per_coordinate_layout(2);
  auto net = RatioNet::init({2, 4, 1}, Activation::tanh, 1);
  Vector t = net.forward(critic_inputs(data, lay));
  Eigen::ArrayXd e = (-t.array()).exp();
  auto w = compute_weights(net, data, lay);
  EXPECT_LT((w.values.array() - e / e.mean()).abs().maxCoeff(), 1e-13);
  EXPECT_NEAR(w.normalizer, e.mean(), 1e-13);
}

TEST(EffectiveSampleSize, Examples) {
  EXPECT_NEAR(effective_sample_size(BalancingWeights::uniform(7)), 7.0, 1e-12);
  Vector v = Vector::Zero(5);
  v(2) = 5.0;
  EXPECT_NEAR(effective_sample_size(BalancingWeights::from_values(v)), 1.0, 1e-12);
  Vector two(2);
  two << 2.0, 0.0;
  EXPECT_NEAR(effective_sample_size(BalancingWeights::from_values(two)), 1.0, 1e-12);
}

TEST(BalancingWeights, FromValuesValidation) {
  Vector neg(2);
  neg << 1.0, -1.0;
  EXPECT_THROW(BalancingWeights::from_values(neg), ConfigError);
  EXPECT_THROW(BalancingWeights::from_values(Vector::Zero(3)), ConfigError);
}

TEST(BalancingWeights, CsvRoundTrip) {
  Vector v(3);
  v << 0.5, 1.0, 1.5;
  auto w = BalancingWeights::from_values(v);
  auto path = std::filesystem::temp_directory_path() / "nbw_weights.csv";
  w.save_csv(path);
  auto back = BalancingWeights::load_csv(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.values, w.values);
}

TEST(CheckBalance, UnitWeightsEqualPlainEstimator) {
  auto data = gen_gaussian({2, 0.8}, 400, 4);
  auto [tr, te] = split(data, 0.5, 1);
  auto lay = per_coordinate_layout(2);
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.batch_size = 50;
  cfg.epochs = 5;
  cfg.seed = 3;
  auto rep = check_balance(tr, te, lay, BalancingWeights::uniform(tr.n_rows()), BalancingWeights::uniform(te.n_rows()),
                           cfg);
  EXPECT_EQ(rep.i_alpha_weighted, rep.i_alpha_uniform);
  EXPECT_NEAR(rep.ess, double(tr.n_rows()), 1e-9);
  // Same as training a critic directly with the checker seed.
  TrainConfig checker = cfg;
  checker.seed = derive_seed(cfg.seed, 0x434B);
  auto direct = train(tr, te, lay, checker);
  EXPECT_EQ(rep.i_alpha_uniform, direct.trace.max_test_estimate());
}

TEST(CheckBalance, RowCountMismatchThrows) {
  auto data = gen_gaussian({2, 0.8}, 100, 4);
  auto [tr, te] = split(data, 0.5, 1);
  TrainConfig cfg;
  cfg.batch_size = 10;
  EXPECT_THROW(check_balance(tr, te, per_coordinate_layout(2), BalancingWeights::uniform(3),
                             BalancingWeights::uniform(te.n_rows()), cfg),
               ConfigError);
}
