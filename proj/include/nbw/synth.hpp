#pragma once

#include "nbw/dataset.hpp"
#include "nbw/oracle.hpp"

#include <cstdint>

namespace nbw {

// n i.i.d. rows x = L z, L the Cholesky factor of the equicorrelation matrix.
// Columns x1..xd.
Dataset gen_gaussian(const GaussianSpec& spec, std::size_t n, std::uint64_t seed);

// One group per coordinate: groups x1..xd, no covariates.
VariableLayout per_coordinate_layout(std::size_t d);

/// Causal benchmark with a continuous treatment A, a transformed covariate
/// block X = (X1, X2, X3) and outcome Y.
///
/// Latents: W1 ~ N(-0.5,1), W2 ~ N(1,1), W3 ~ N(0,1), W4 ~ N(1,1),
/// W5 in {0,1,2} w.p. (0.70, 0.15, 0.15). A ~ noncentral chi^2 with 3
/// degrees of freedom and noncentrality 5|W1| + 6|W2| + |W4| + a(W5),
/// a = (0, 1, 5). Observed columns:
///   A, X11 = exp(W1/2), X12 = W2/(1 + exp(W1)) + 10, X13 = W1 W3/25 + 0.6,
///   X2 = (W4 - 1)^2, (X3a, X3b) = one-hot of W5 with (0,0) for W5 = 2, Y.
struct CausalData {
  Dataset observed;
  Dataset latent;  // W1..W5 (and eps for training draws)
  std::size_t resampled_rows = 0;
};

enum class CausalMode { exp1, exp2 };

CausalMode causal_mode_from_string(const std::string& s);

inline constexpr double kCausalCentering = 1161.25;  // E[(W1+3)^2] + 2 E[(W2-25)^2] + E[W3]

// Y without the eps term (eps = 0 gives the noiseless truth).
double causal_outcome(double a, double w1, double w2, double w3, double eps);

struct CausalLatent {
  double w1, w2, w3, w4, w5;
};
CausalLatent causal_transform_inverse(double x11, double x12, double x13, double x2, double x3a, double x3b);

// exp1: groups {A}, {X}; exp2: groups {A}, {X1}, {X2}, {X3}.
VariableLayout causal_layout(CausalMode mode);

CausalData gen_causal_train(std::size_t n, std::uint64_t seed);

// Draws as training, breaks the dependence between the layout groups by
// independent shuffles, recovers W by the inverse transform, and replaces Y
// with the noiseless Y_true.
CausalData gen_causal_test(std::size_t n, std::uint64_t seed, CausalMode mode);

struct LogisticData {
  Dataset data;               // columns x, z1, z2
  Vector propensity;          // e(z) = sigmoid(beta . z)
  Vector stabilized_weights;  // P(X=x) / P(X=x | z)
};

// Z ~ N(0, I_2), X ~ Bernoulli(sigmoid(beta . z)). With no intercept P(X=1) = 1/2 exactly.
LogisticData gen_logistic_binary(std::size_t n, std::uint64_t seed, double beta1 = 1.0, double beta2 = -0.5);

// Group {x}, covariates {z1, z2}.
VariableLayout logistic_layout();

}  // namespace nbw
