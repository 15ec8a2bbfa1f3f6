#include "nbw/effect.hpp"

#include "nbw/errors.hpp"
#include "nbw/sampler.hpp"

#include <cmath>

namespace nbw {

namespace {

Vector mean_one(std::span<const double> weights, Eigen::Index rows) {
  if (weights.empty()) return Vector::Ones(rows);
  if (static_cast<Eigen::Index>(weights.size()) != rows) throw ConfigError("weights do not match rows");
  Vector w = Eigen::Map<const Vector>(weights.data(), rows);
  if (!w.allFinite() || (w.array() < 0.0).any()) throw ConfigError("weights must be finite and nonnegative");
  const double mean = w.mean();
  if (!(mean > 0.0)) throw ConfigError("weights must not all be zero");
  return w / mean;
}

}  // namespace

Vector LinearModel::predict(const Matrix& features) const {
  if (features.cols() + 1 != coefficients.size()) throw ConfigError("feature width does not match the linear model");
  return (features * coefficients.tail(features.cols())).array() + coefficients(0);
}

LinearModel weighted_linear_regression(const Matrix& features, const Vector& target, std::span<const double> weights) {
  const auto n = features.rows();
  if (target.size() != n) throw ConfigError("target length does not match feature rows");
  if (n == 0) throw ConfigError("regression needs at least one row");
  const Vector w = mean_one(weights, n);
  Matrix design(n, features.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(features.cols()) = features;
  const Matrix weighted_design = design.array().colwise() * w.array();
  Matrix gram = design.transpose() * weighted_design;
  gram.diagonal().array() += 1e-10;
  const Vector rhs = weighted_design.transpose() * target;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw NumericalError("weighted normal equations are singular");
  }
  LinearModel model{ldlt.solve(rhs)};
  if (!model.coefficients.allFinite()) throw NumericalError("weighted least squares produced non-finite coefficients");
  return model;
}

GradientVector weighted_mse_gradient(const RatioNet& net, const Matrix& features, const Vector& target,
                                     std::span<const double> weights) {
  if (target.size() != features.rows()) throw ConfigError("target length does not match feature rows");
  const Vector w = mean_one(weights, features.rows());
  const Vector err = target - net.forward(features);
  // d/df of mean(w err^2) = -2 w err / M
  const Vector cotangent = (-2.0 / static_cast<double>(features.rows())) * w.cwiseProduct(err);
  return backprop(net, features, cotangent);
}

double weighted_mse(const RatioNet& net, const Matrix& features, const Vector& target, std::span<const double> weights) {
  const Vector w = mean_one(weights, features.rows());
  const Vector err = target - net.forward(features);
  return w.cwiseProduct(err.cwiseAbs2()).mean();
}

MlpRegressor weighted_mlp_train(const Matrix& features, const Vector& target, std::span<const double> weights,
                                const MlpProfile& profile) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (target.size() != features.rows()) throw ConfigError("target length does not match feature rows");
  const Vector w = mean_one(weights, features.rows());
  std::vector<std::size_t> dims = {static_cast<std::size_t>(features.cols())};
  dims.insert(dims.end(), profile.hidden.begin(), profile.hidden.end());
  dims.push_back(1);
  RatioNet net = RatioNet::init(dims, profile.activation, profile.seed);
  AdamState adam = AdamState::for_net(net, profile.learning_rate);
  const auto batch = std::min(profile.batch_size, n);
  for (std::size_t epoch = 0; epoch < profile.epochs; ++epoch) {
    for (const auto& rows : minibatch_indices(n, batch, profile.seed, epoch)) {
      const Matrix x = gather_rows(features, rows);
      Vector y(static_cast<Eigen::Index>(rows.size()));
      std::vector<double> bw(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = target(static_cast<Eigen::Index>(rows[i]));
        bw[i] = w(static_cast<Eigen::Index>(rows[i]));
      }
      // Batch weights are the global mean-one weights, not re-normalised per batch.
      const Vector err = y - net.forward(x);
      const Vector cotangent =
          (-2.0 / static_cast<double>(rows.size())) * Eigen::Map<const Vector>(bw.data(), y.size()).cwiseProduct(err);
      adam_step(adam, net, backprop(net, x, cotangent));
    }
  }
  return MlpRegressor{std::move(net)};
}

Vector predict(const EffectModel& model, const Matrix& features) {
  return std::visit([&](const auto& m) { return m.predict(features); }, model);
}

std::string learner_tag(const EffectModel& model) {
  return std::holds_alternative<LinearModel>(model) ? "weighted-linear" : "weighted-mlp";
}

nlohmann::json EffectEstimate::to_json() const {
  return {{"learner", learner},
          {"rmse_vs_truth", rmse_vs_truth},
          {"predictions", std::vector<double>(predictions.data(), predictions.data() + predictions.size())}};
}

double rmse(const Vector& predictions, const Vector& truth) {
  if (predictions.size() != truth.size() || predictions.size() == 0) throw ConfigError("rmse: length mismatch");
  return std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(predictions.size()));
}

EffectEstimate evaluate_cace(const EffectModel& model, const Dataset& test,
                             const std::vector<std::string>& feature_columns, const std::string& truth_column) {
  if (!test.has_column(truth_column)) {
    throw ConfigError("test data has no truth column '" + truth_column + "'");
  }
  std::vector<std::size_t> cols;
  for (const auto& name : feature_columns) cols.push_back(test.column_index(name));
  const Matrix x = test.select_columns(cols).values();
  EffectEstimate est;
  est.predictions = predict(model, x);
  if (!est.predictions.allFinite()) throw DivergenceError("model predictions are not finite", 0.0);
  est.rmse_vs_truth = rmse(est.predictions, test.column(truth_column));
  est.learner = learner_tag(model);
  return est;
}

}  // namespace nbw
