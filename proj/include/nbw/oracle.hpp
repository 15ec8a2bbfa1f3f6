#pragma once

#include "nbw/dataset.hpp"
#include "nbw/divergence.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace nbw {

/// Equicorrelated unit-variance Gaussian: zero means, pairwise correlation rho.
struct GaussianSpec {
  std::size_t d = 2;
  double rho = 0.0;

  // d >= 1 and -1/(d-1) < rho < 1; throws ConfigError otherwise.
  void validate() const;
  Matrix covariance() const;
};

class ZeroMeanGaussian {
 public:
  // Throws ConfigError unless the covariance is symmetric (1e-12) and positive definite.
  explicit ZeroMeanGaussian(Matrix covariance);

  std::size_t dim() const { return static_cast<std::size_t>(covariance_.rows()); }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& precision() const { return precision_; }
  const Matrix& cholesky_factor() const { return chol_; }
  double log_det() const { return log_det_; }
  double log_density(const Vector& x) const;

 private:
  Matrix covariance_;
  Matrix precision_;
  Matrix chol_;  // lower
  double log_det_ = 0.0;
};

// log q(x) - log p(x).
double log_density_ratio(const ZeroMeanGaussian& q, const ZeroMeanGaussian& p, const Vector& x);

/// D_alpha(Q || P) = (E_P[(dQ/dP)^(1-alpha)] - 1) / (alpha (alpha - 1)) in closed form.
/// Returns +infinity when (1-alpha) Sigma_q^-1 + alpha Sigma_p^-1 is not positive definite.
double alpha_divergence(const ZeroMeanGaussian& q, const ZeroMeanGaussian& p, AlphaParam alpha);

// Same quantity by tensor-product Gauss-Hermite quadrature under P; d <= 2 only.
double alpha_divergence_quadrature(const ZeroMeanGaussian& q, const ZeroMeanGaussian& p, AlphaParam alpha,
                                   std::size_t nodes = 200);

// Equal-covariance pair with different means.
double alpha_divergence_shifted(const Matrix& covariance, const Vector& mean_q, const Vector& mean_p,
                                AlphaParam alpha);
double alpha_divergence_shifted_quadrature(const Matrix& covariance, const Vector& mean_q, const Vector& mean_p,
                                           AlphaParam alpha, std::size_t nodes = 200);

// Divergence between the product of marginals N(0, I) and the joint N(0, Sigma_rho).
double alpha_information(const GaussianSpec& spec, AlphaParam alpha);

struct GaussHermiteRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // for the weight function exp(-x^2)
};

// Golub-Welsch eigen-decomposition refined by Newton steps on the Hermite recurrence.
GaussHermiteRule gauss_hermite(std::size_t n);

}  // namespace nbw
