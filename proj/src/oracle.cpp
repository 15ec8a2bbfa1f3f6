#include "nbw/oracle.hpp"

#include "nbw/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

namespace nbw {

void GaussianSpec::validate() const {
  if (d < 1) throw ConfigError("Gaussian dimension must be at least 1");
  if (!(rho < 1.0)) throw ConfigError("correlation must be below 1");
  if (d > 1 && !(rho > -1.0 / static_cast<double>(d - 1))) {
    throw ConfigError("correlation must exceed -1/(d-1) for a positive-definite equicorrelation matrix");
  }
}

Matrix GaussianSpec::covariance() const {
  validate();
  const auto n = static_cast<Eigen::Index>(d);
  Matrix cov = Matrix::Constant(n, n, rho);
  cov.diagonal().setOnes();
  return cov;
}

ZeroMeanGaussian::ZeroMeanGaussian(Matrix covariance) : covariance_(std::move(covariance)) {
  if (covariance_.rows() == 0 || covariance_.rows() != covariance_.cols()) {
    throw ConfigError("covariance must be a nonempty square matrix");
  }
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ConfigError("covariance must be symmetric");
  }
  Eigen::LLT<Matrix> llt(covariance_);
  if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive definite");
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  precision_ = llt.solve(Matrix::Identity(covariance_.rows(), covariance_.cols()));
}

double ZeroMeanGaussian::log_density(const Vector& x) const {
  if (x.size() != covariance_.rows()) throw ConfigError("point dimension mismatch");
  const double quad = x.dot(precision_ * x);
  return -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) + log_det_ + quad);
}

double log_density_ratio(const ZeroMeanGaussian& q, const ZeroMeanGaussian& p, const Vector& x) {
  if (q.dim() != p.dim() || static_cast<std::size_t>(x.size()) != q.dim()) {
    throw ConfigError("log_density_ratio: dimension mismatch");
  }
  return 0.5 * (p.log_det() - q.log_det()) - 0.5 * x.dot((q.precision() - p.precision()) * x);
}

double alpha_divergence(const ZeroMeanGaussian& q, const ZeroMeanGaussian& p, AlphaParam alpha) {
  if (q.dim() != p.dim()) throw ConfigError("alpha_divergence: dimension mismatch");
  const double a = alpha.value();
  const double beta = 1.0 - a;
  const Matrix m = beta * q.precision() + a * p.precision();
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Matrix l = llt.matrixL();
  const double log_det_m = 2.0 * l.diagonal().array().log().sum();
  const double log_affinity = -0.5 * (beta * q.log_det() + a * p.log_det() + log_det_m);
  return std::expm1(log_affinity) / (a * (a - 1.0));
}

GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw ConfigError("Gauss-Hermite rule needs at least one node");
  const auto size = static_cast<Eigen::Index>(n);
  Matrix jacobi = Matrix::Zero(size, size);
  for (Eigen::Index k = 1; k < size; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k) / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi, Eigen::EigenvaluesOnly);
  const Vector roots = solver.eigenvalues();

  // Orthonormal Hermite polynomials; returns psi_n and accumulates sum psi_k^2 for k < n.
  const double psi0 = std::pow(std::numbers::pi, -0.25);
  auto evaluate = [&](double x, double& psi_n, double& psi_nm1, double& christoffel) {
    double prev = 0.0;
    double cur = psi0;
    christoffel = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      christoffel += cur * cur;
      const double next = x * std::sqrt(2.0 / static_cast<double>(k + 1)) * cur -
                          std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1)) * prev;
      prev = cur;
      cur = next;
    }
    psi_n = cur;
    psi_nm1 = prev;
  };

  GaussHermiteRule rule;
  for (Eigen::Index i = 0; i < size; ++i) {
    double x = roots(i);
    double psi_n, psi_nm1, christoffel;
    for (int iter = 0; iter < 4; ++iter) {
      evaluate(x, psi_n, psi_nm1, christoffel);
      const double derivative = std::sqrt(2.0 * static_cast<double>(n)) * psi_nm1;
      if (derivative == 0.0) break;
      x -= psi_n / derivative;
    }
    evaluate(x, psi_n, psi_nm1, christoffel);
    rule.nodes.push_back(x);
    rule.weights.push_back(1.0 / christoffel);
  }
  return rule;
}

namespace {

// E_P[f(X)] for P = N(mean, L L^T), d <= 2.
template <typename F>
double gaussian_expectation(const Vector& mean, const Matrix& chol, std::size_t nodes, F&& f) {
  const auto d = mean.size();
  if (d < 1 || d > 2) throw ConfigError("quadrature supports dimension 1 or 2 only");
  const auto rule = gauss_hermite(nodes);
  const double scale = std::sqrt(2.0);
  double total = 0.0;
  if (d == 1) {
    Vector x(1);
    for (std::size_t i = 0; i < nodes; ++i) {
      x(0) = mean(0) + scale * chol(0, 0) * rule.nodes[i];
      total += rule.weights[i] * f(x);
    }
    return total / std::sqrt(std::numbers::pi);
  }
  Vector u(2);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      u << rule.nodes[i], rule.nodes[j];
      const Vector x = mean + scale * chol * u;
      total += rule.weights[i] * rule.weights[j] * f(x);
    }
  }
  return total / std::numbers::pi;
}

}  // namespace

double alpha_divergence_quadrature(const ZeroMeanGaussian& q, const ZeroMeanGaussian& p, AlphaParam alpha,
                                   std::size_t nodes) {
  if (q.dim() != p.dim()) throw ConfigError("alpha_divergence_quadrature: dimension mismatch");
  const double a = alpha.value();
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(p.dim()));
  const double affinity = gaussian_expectation(zero, p.cholesky_factor(), nodes, [&](const Vector& x) {
    return std::exp((1.0 - a) * log_density_ratio(q, p, x));
  });
  return (affinity - 1.0) / (a * (a - 1.0));
}

double alpha_divergence_shifted(const Matrix& covariance, const Vector& mean_q, const Vector& mean_p,
                                AlphaParam alpha) {
  const ZeroMeanGaussian base(covariance);
  if (mean_q.size() != covariance.rows() || mean_p.size() != covariance.rows()) {
    throw ConfigError("mean dimension mismatch");
  }
  const double a = alpha.value();
  const Vector delta = mean_q - mean_p;
  const double mahalanobis = delta.dot(base.precision() * delta);
  return std::expm1(-0.5 * a * (1.0 - a) * mahalanobis) / (a * (a - 1.0));
}

double alpha_divergence_shifted_quadrature(const Matrix& covariance, const Vector& mean_q, const Vector& mean_p,
                                           AlphaParam alpha, std::size_t nodes) {
  const ZeroMeanGaussian base(covariance);
  const double a = alpha.value();
  const double affinity = gaussian_expectation(mean_p, base.cholesky_factor(), nodes, [&](const Vector& x) {
    const double log_ratio = base.log_density(x - mean_q) - base.log_density(x - mean_p);
    return std::exp((1.0 - a) * log_ratio);
  });
  return (affinity - 1.0) / (a * (a - 1.0));
}

double alpha_information(const GaussianSpec& spec, AlphaParam alpha) {
  const auto n = static_cast<Eigen::Index>(spec.d);
  const ZeroMeanGaussian product(Matrix::Identity(n, n));
  const ZeroMeanGaussian joint(spec.covariance());
  return alpha_divergence(product, joint, alpha);
}

}  // namespace nbw
