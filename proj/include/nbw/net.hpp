#pragma once

#include "nbw/dataset.hpp"
#include "nbw/divergence.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace nbw {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Multilayer perceptron R^D -> R with an affine output layer.
///
/// dims = (D, h_1, ..., h_L, 1). Hidden layers apply the activation; the
/// output layer does not, so the critic is unbounded in both directions.
class RatioNet {
 public:
  RatioNet(std::vector<std::size_t> dims, Activation activation, std::vector<DenseLayer> layers);

  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  static RatioNet init(std::vector<std::size_t> dims, Activation activation, std::uint64_t seed);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  Activation activation() const { return activation_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  Vector forward(const Matrix& batch) const;

  // Layer by layer: weight in row-major order, then bias.
  Vector flat_parameters() const;
  void set_flat_parameters(const Vector& params);

  nlohmann::json to_json() const;
  static RatioNet from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RatioNet load(const std::filesystem::path& path);

 private:
  std::vector<std::size_t> dims_;
  Activation activation_;
  std::vector<DenseLayer> layers_;
};

using GradientVector = Vector;

// Gradient w.r.t. the flat parameters of sum_i cotangent_i * net(x_i).
GradientVector backprop(const RatioNet& net, const Matrix& batch, const Vector& output_cotangent);

struct AlphaGradient {
  GradientVector gradient;
  AlphaLossTerms terms;
};

/// Gradient of the empirical alpha loss over exactly these batches.
///
/// Output cotangents are (1/M_Q) exp(alpha T) on Q rows and
/// -(1/M_P) w_i exp((alpha - 1) T) on P rows. Throws DivergenceError when an
/// exponent leaves the guarded range.
AlphaGradient backward_alpha(const RatioNet& net, const Matrix& batch_p, const Matrix& batch_q, AlphaParam alpha,
                             std::span<const double> p_weights = {});

// Central differences of the same loss; test oracle.
GradientVector finite_diff_grad(const RatioNet& net, const Matrix& batch_p, const Matrix& batch_q, AlphaParam alpha,
                                double step, std::span<const double> p_weights = {});

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  static AdamState for_net(const RatioNet& net, double learning_rate);
};

// Bias-corrected Adam update in place. Non-finite gradients raise DivergenceError.
void adam_step(AdamState& state, RatioNet& net, const GradientVector& grad);

}  // namespace nbw
