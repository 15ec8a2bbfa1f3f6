#include "nbw/synth.hpp"

#include "nbw/errors.hpp"
#include "nbw/rng.hpp"
#include "nbw/sampler.hpp"

#include <cmath>
#include <iostream>

namespace nbw {

namespace {

constexpr std::uint64_t kShuffleTag = 0x5348;  // "SH"

const std::vector<std::string> kCausalColumns = {"A", "X11", "X12", "X13", "X2", "X3a", "X3b"};

}  // namespace

Dataset gen_gaussian(const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample size must be positive");
  const Matrix cov = spec.covariance();
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("equicorrelation matrix is not positive definite");
  const Matrix l = llt.matrixL();
  const auto d = static_cast<Eigen::Index>(spec.d);
  RandomStream rng(seed);
  Matrix z(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < spec.d; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(z * l.transpose(), std::move(names));
}

VariableLayout per_coordinate_layout(std::size_t d) {
  VariableLayout layout;
  for (std::size_t j = 0; j < d; ++j) layout.groups.push_back({"x" + std::to_string(j + 1), {j}});
  return layout;
}

CausalMode causal_mode_from_string(const std::string& s) {
  if (s == "exp1") return CausalMode::exp1;
  if (s == "exp2") return CausalMode::exp2;
  throw ConfigError("unknown causal mode '" + s + "' (expected exp1 or exp2)");
}

double causal_outcome(double a, double w1, double w2, double w3, double eps) {
  const double treatment_terms = -0.15 * a * a + a * (w1 * w1 + w2 * w2) - 15.0;
  const double covariate_terms = (w1 + 3.0) * (w1 + 3.0) + 2.0 * (w2 - 25.0) * (w2 - 25.0) + w3;
  return (treatment_terms + covariate_terms - kCausalCentering + eps) / 50.0;
}

CausalLatent causal_transform_inverse(double x11, double x12, double x13, double x2, double x3a, double x3b) {
  CausalLatent w{};
  const double log_x11 = std::log(x11);
  w.w1 = 2.0 * log_x11;
  w.w2 = (x12 - 10.0) * (1.0 + x11 * x11);
  w.w3 = 25.0 * (x13 - 0.6) / (2.0 * log_x11);
  // The sign of W4 - 1 is lost by the square; the principal root is taken.
  w.w4 = std::sqrt(x2) + 1.0;
  if (x3a == 1.0 && x3b == 0.0) {
    w.w5 = 0.0;
  } else if (x3a == 0.0 && x3b == 1.0) {
    w.w5 = 1.0;
  } else if (x3a == 0.0 && x3b == 0.0) {
    w.w5 = 2.0;
  } else {
    throw ConfigError("X3 must be one of (1,0), (0,1), (0,0)");
  }
  return w;
}

VariableLayout causal_layout(CausalMode mode) {
  VariableLayout layout;
  if (mode == CausalMode::exp1) {
    layout.groups = {{"A", {0}}, {"X", {1, 2, 3, 4, 5, 6}}};
  } else {
    layout.groups = {{"A", {0}}, {"X1", {1, 2, 3}}, {"X2", {4}}, {"X3", {5, 6}}};
  }
  return layout;
}

CausalData gen_causal_train(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample size must be positive");
  RandomStream latent_rng(seed, 0);
  RandomStream treatment_rng(seed, 1);
  RandomStream noise_rng(seed, 2);
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix obs(rows, 8);
  Matrix lat(rows, 6);
  std::size_t resampled = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    double w1 = latent_rng.normal(-0.5, 1.0);
    // W1 == 0 makes the W3 inverse singular; probability zero but rejected, not patched.
    while (std::abs(0.5 * w1) < 1e-12) {
      ++resampled;
      w1 = latent_rng.normal(-0.5, 1.0);
    }
    const double w2 = latent_rng.normal(1.0, 1.0);
    const double w3 = latent_rng.normal(0.0, 1.0);
    const double w4 = latent_rng.normal(1.0, 1.0);
    const double u = latent_rng.uniform();
    const double w5 = u < 0.70 ? 0.0 : (u < 0.85 ? 1.0 : 2.0);
    const double shift = w5 == 0.0 ? 0.0 : (w5 == 1.0 ? 1.0 : 5.0);
    const double noncentrality = 5.0 * std::abs(w1) + 6.0 * std::abs(w2) + std::abs(w4) + shift;
    const double a = treatment_rng.noncentral_chi_squared(3.0, noncentrality);
    const double eps = noise_rng.normal();

    obs(i, 0) = a;
    obs(i, 1) = std::exp(0.5 * w1);
    obs(i, 2) = w2 / (1.0 + std::exp(w1)) + 10.0;
    obs(i, 3) = w1 * w3 / 25.0 + 0.6;
    obs(i, 4) = (w4 - 1.0) * (w4 - 1.0);
    obs(i, 5) = w5 == 0.0 ? 1.0 : 0.0;
    obs(i, 6) = w5 == 1.0 ? 1.0 : 0.0;
    obs(i, 7) = causal_outcome(a, w1, w2, w3, eps);
    lat.row(i) << w1, w2, w3, w4, w5, eps;
  }
  if (resampled > 0) std::cerr << "gen_causal_train: resampled " << resampled << " rows with W1 == 0\n";
  auto obs_names = kCausalColumns;
  obs_names.push_back("Y");
  return CausalData{Dataset(std::move(obs), std::move(obs_names)),
                    Dataset(std::move(lat), {"W1", "W2", "W3", "W4", "W5", "eps"}), resampled};
}

CausalData gen_causal_test(std::size_t n, std::uint64_t seed, CausalMode mode) {
  const auto base = gen_causal_train(n, seed);
  const auto layout = causal_layout(mode);
  const auto view = product_shuffle(base.observed, layout, derive_seed(seed, kShuffleTag));
  Matrix shuffled = view.materialize();
  const auto rows = shuffled.rows();
  Matrix lat(rows, 5);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto w = causal_transform_inverse(shuffled(i, 1), shuffled(i, 2), shuffled(i, 3), shuffled(i, 4),
                                            shuffled(i, 5), shuffled(i, 6));
    lat.row(i) << w.w1, w.w2, w.w3, w.w4, w.w5;
    shuffled(i, 7) = causal_outcome(shuffled(i, 0), w.w1, w.w2, w.w3, 0.0);
  }
  auto obs_names = kCausalColumns;
  obs_names.push_back("Y_true");
  return CausalData{Dataset(std::move(shuffled), std::move(obs_names)),
                    Dataset(std::move(lat), {"W1", "W2", "W3", "W4", "W5"}), base.resampled_rows};
}

LogisticData gen_logistic_binary(std::size_t n, std::uint64_t seed, double beta1, double beta2) {
  if (n < 1) throw ConfigError("sample size must be positive");
  RandomStream rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix values(rows, 3);
  Vector propensity(rows);
  Vector weights(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double e = 1.0 / (1.0 + std::exp(-(beta1 * z1 + beta2 * z2)));
    const double x = rng.uniform() < e ? 1.0 : 0.0;
    values.row(i) << x, z1, z2;
    propensity(i) = e;
    weights(i) = x == 1.0 ? 0.5 / e : 0.5 / (1.0 - e);
  }
  return LogisticData{Dataset(std::move(values), {"x", "z1", "z2"}), std::move(propensity), std::move(weights)};
}

VariableLayout logistic_layout() {
  VariableLayout layout;
  layout.groups = {{"x", {0}}};
  layout.covariates = {1, 2};
  return layout;
}

}  // namespace nbw
