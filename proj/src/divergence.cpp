#include "nbw/divergence.hpp"

#include "nbw/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nbw {

AlphaParam::AlphaParam(double value) : value_(value) {
  if (!std::isfinite(value)) throw ConfigError("alpha must be finite");
  if (value == 0.0 || value == 1.0) throw ConfigError("alpha must not be 0 or 1");
}

AlphaLossTerms AlphaLossTerms::from_means(double e_q, double e_p, AlphaParam alpha) {
  const double a = alpha.value();
  AlphaLossTerms t;
  t.e_q = e_q;
  t.e_p = e_p;
  t.loss = e_q / a + e_p / (1.0 - a);
  t.estimate = alpha.scale() - t.loss;
  return t;
}

double guarded_exp(double arg) {
  if (std::isnan(arg)) throw DivergenceError("critic output is not finite", std::numeric_limits<double>::quiet_NaN());
  if (arg > kMaxExponent) {
    throw DivergenceError("exponent " + std::to_string(arg) + " exceeds " + std::to_string(kMaxExponent), arg);
  }
  return std::exp(arg);
}

AlphaLossTerms alpha_loss(std::span<const double> t_p, std::span<const double> t_q, AlphaParam alpha,
                          std::span<const double> p_weights) {
  if (t_p.empty() || t_q.empty()) throw ConfigError("alpha_loss needs nonempty P and Q samples");
  if (!p_weights.empty() && p_weights.size() != t_p.size()) throw ConfigError("P weights do not match P samples");
  const double a = alpha.value();
  double sum_q = 0.0;
  for (double t : t_q) sum_q += guarded_exp(a * t);
  double sum_p = 0.0;
  for (std::size_t i = 0; i < t_p.size(); ++i) {
    const double e = guarded_exp((a - 1.0) * t_p[i]);
    sum_p += p_weights.empty() ? e : p_weights[i] * e;
  }
  return AlphaLossTerms::from_means(sum_q / static_cast<double>(t_q.size()), sum_p / static_cast<double>(t_p.size()),
                                    alpha);
}

double plugin_estimate(std::span<const double> t_p, std::span<const double> t_q, AlphaParam alpha) {
  return alpha_loss(t_p, t_q, alpha).estimate;
}

double asymptotic_variance(AlphaParam alpha, double d_alpha, double d_2am1) {
  const double a = alpha.value();
  if (a == 0.5) return 4.0 * d_alpha - 0.5 * d_alpha * d_alpha;
  const double b = 1.0 - a;
  const double c1 = (1.0 / (a * a) + 1.0 / (b * b)) * (2.0 * a - 1.0) * (2.0 * a - 2.0);
  const double c2 = 2.0 * (a * a + b * b) / (a * b);
  const double c3 = -a * a - b * b;
  return c1 * d_2am1 + c2 * d_alpha + c3 * d_alpha * d_alpha;
}

}  // namespace nbw
