#pragma once

#include "nbw/dataset.hpp"
#include "nbw/net.hpp"
#include "nbw/trainer.hpp"

#include <filesystem>
#include <string>

#include <json.hpp>

namespace nbw {

/// Nonnegative per-row weights with mean one: w_i = exp(-T(x_i)) / mean_j exp(-T(x_j)).
struct BalancingWeights {
  Vector values;
  std::string source_model;
  // mean_j exp(-T(x_j)); may be 0 or inf in floating point while the weights stay finite.
  double normalizer = 1.0;
  double log_normalizer = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  std::span<const double> span() const { return {values.data(), size()}; }

  // Rescales arbitrary nonnegative finite values to mean one.
  static BalancingWeights from_values(Vector values, std::string source = {});
  static BalancingWeights uniform(std::size_t n);

  // Single column with header "weight".
  void save_csv(const std::filesystem::path& path) const;
  static BalancingWeights load_csv(const std::filesystem::path& path);
};

// Computed in log space, so adding a constant to T leaves the weights unchanged.
BalancingWeights compute_weights(const RatioNet& net, const Dataset& data, const VariableLayout& layout,
                                 std::string source_model = {});

// (sum w)^2 / sum w^2.
double effective_sample_size(const BalancingWeights& w);

struct BalanceReport {
  double i_alpha_weighted = 0.0;
  double i_alpha_uniform = 0.0;
  double ess = 0.0;
  double max_weight = 0.0;
  TrainTrace weighted_trace;
  TrainTrace uniform_trace;

  nlohmann::json to_json() const;
};

/// Balance check.
///
/// Trains a fresh checker critic whose P-side mean is weighted by the
/// balancing weights (the Q side is the unweighted product shuffle), and
/// takes the maximum test-set estimate over the run. The same procedure with
/// unit weights gives the baseline. Weights on the test rows come from the
/// same balancing model as the training weights.
BalanceReport check_balance(const Dataset& train_data, const Dataset& test_data, const VariableLayout& layout,
                            const BalancingWeights& train_weights, const BalancingWeights& test_weights,
                            const TrainConfig& cfg);

// Convenience form: weights for both sets from `model`.
BalanceReport check_balance(const Dataset& train_data, const Dataset& test_data, const VariableLayout& layout,
                            const RatioNet& model, const TrainConfig& cfg);

}  // namespace nbw
