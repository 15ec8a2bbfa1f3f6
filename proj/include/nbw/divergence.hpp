#pragma once

#include <span>

namespace nbw {

/// The alpha of the alpha-divergence. 0 and 1 are excluded (the loss has a
/// pole there); values in (0, 1) are the stable region where the critic's
/// gradient cannot vanish at degenerate ratios.
class AlphaParam {
 public:
  explicit AlphaParam(double value);
  double value() const { return value_; }
  bool stable() const { return value_ > 0.0 && value_ < 1.0; }
  // 1 / (alpha (1 - alpha)): the loss at T == 0 and the upper bound on the estimate for alpha in (0,1).
  double scale() const { return 1.0 / (value_ * (1.0 - value_)); }

 private:
  double value_;
};

// Exponent arguments above this raise DivergenceError.
inline constexpr double kMaxExponent = 700.0;

/// Empirical pieces of the variational alpha-divergence objective.
///   e_q      = mean over Q rows of exp(alpha T)
///   e_p      = (weighted) mean over P rows of exp((alpha - 1) T)
///   loss     = e_q / alpha + e_p / (1 - alpha)
///   estimate = 1 / (alpha (1 - alpha)) - loss
struct AlphaLossTerms {
  double e_q = 0.0;
  double e_p = 0.0;
  double loss = 0.0;
  double estimate = 0.0;

  static AlphaLossTerms from_means(double e_q, double e_p, AlphaParam alpha);
};

// exp(arg) with the overflow guard; arg must be finite and <= kMaxExponent.
double guarded_exp(double arg);

// `p_weights`, when nonempty, weights the P-side mean: (1/M) sum w_i exp((alpha-1) T_i).
AlphaLossTerms alpha_loss(std::span<const double> t_p, std::span<const double> t_q, AlphaParam alpha,
                          std::span<const double> p_weights = {});

// Estimate at a fixed critic; inputs are critic values T = -log dQ/dP at
// samples from P and from Q.
double plugin_estimate(std::span<const double> t_p, std::span<const double> t_q, AlphaParam alpha);

/// Limit of N * Var[plug-in estimate] at the optimal critic.
/// alpha != 1/2: C1 D_{2 alpha - 1} + C2 D_alpha + C3 D_alpha^2 with
///   C1 = (1/alpha^2 + 1/(1-alpha)^2)(2 alpha - 1)(2 alpha - 2),
///   C2 = 2 (alpha^2 + (1-alpha)^2) / (alpha (1-alpha)),
///   C3 = -alpha^2 - (1-alpha)^2.
/// alpha == 1/2: 4 D - D^2 / 2 (d_2am1 ignored).
double asymptotic_variance(AlphaParam alpha, double d_alpha, double d_2am1);

}  // namespace nbw
