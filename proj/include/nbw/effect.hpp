#pragma once

#include "nbw/dataset.hpp"
#include "nbw/net.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace nbw {

// Intercept first, then one coefficient per feature column.
struct LinearModel {
  Vector coefficients;
  Vector predict(const Matrix& features) const;
};

/// Minimises sum_i w_i (y_i - b0 - x_i . b)^2 through the normal equations
/// with 1e-10 added to the diagonal. Weights are rescaled to mean one, so any
/// positive rescaling of w gives the same fit. An empty weight span means
/// unit weights. Throws NumericalError when the system stays singular.
LinearModel weighted_linear_regression(const Matrix& features, const Vector& target, std::span<const double> weights);

struct MlpProfile {
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::relu;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

struct MlpRegressor {
  RatioNet net;
  Vector predict(const Matrix& features) const { return net.forward(features); }
};

// Gradient of mean_i(w_i (y_i - f(x_i))^2) over exactly these rows, weights
// rescaled to mean one over the rows given.
GradientVector weighted_mse_gradient(const RatioNet& net, const Matrix& features, const Vector& target,
                                     std::span<const double> weights);
double weighted_mse(const RatioNet& net, const Matrix& features, const Vector& target, std::span<const double> weights);

// Mini-batch Adam on the weighted MSE.
MlpRegressor weighted_mlp_train(const Matrix& features, const Vector& target, std::span<const double> weights,
                                const MlpProfile& profile);

using EffectModel = std::variant<LinearModel, MlpRegressor>;

Vector predict(const EffectModel& model, const Matrix& features);
std::string learner_tag(const EffectModel& model);

struct EffectEstimate {
  Vector predictions;
  double rmse_vs_truth = 0.0;
  std::string learner;

  nlohmann::json to_json() const;
};

// RMSE of the model's predictions on `feature_columns` of `test` against
// the noiseless truth column. Missing columns raise ConfigError.
EffectEstimate evaluate_cace(const EffectModel& model, const Dataset& test,
                             const std::vector<std::string>& feature_columns, const std::string& truth_column);

double rmse(const Vector& predictions, const Vector& truth);

}  // namespace nbw
