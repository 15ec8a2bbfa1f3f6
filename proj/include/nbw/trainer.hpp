#pragma once

#include "nbw/dataset.hpp"
#include "nbw/net.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace nbw {

struct EarlyStop {
  double c = 1.0;
  double delta = 0.5;
};

/// Training configuration. Defaults are the "divergence" profile: three
/// hidden layers of 100 units, Adam at 1e-3, batch 2500, 500 epochs.
struct TrainConfig {
  double alpha = 0.5;
  double learning_rate = 1e-3;
  std::size_t batch_size = 2500;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  std::optional<EarlyStop> early_stop;
  // Used only when no explicit test set is given.
  double test_fraction = 0.5;
  std::vector<std::size_t> hidden = {100, 100, 100};
  Activation activation = Activation::relu;
  // Draw a fresh product shuffle every epoch instead of once per run.
  bool reshuffle_each_epoch = false;

  static TrainConfig divergence_profile();
  // Ten hidden layers of 100 units, Adam at 1e-4, batch 1000, 70 epochs.
  static TrainConfig causal_profile();

  void validate() const;

  // Keys mirror the field names; an optional "profile" key ("divergence" or
  // "causal") selects the base values that the other keys override.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static TrainConfig load(const std::filesystem::path& path);
};

enum class StopReason { epochs_exhausted, early_stop_k0, divergence };

std::string to_string(StopReason r);

struct TraceRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_estimate = 0.0;
};

/// Evaluation history of one run. Step 0 is the initial network; later
/// records follow every `eval_every` updates plus the final update.
struct TrainTrace {
  std::vector<TraceRecord> records;
  std::size_t selected_step = 0;
  StopReason stop_reason = StopReason::epochs_exhausted;
  std::optional<double> divergence_magnitude;
  std::string divergence_message;

  const TraceRecord& selected() const;
  double max_test_estimate() const { return selected().test_estimate; }

  // step,train_loss,test_loss,test_estimate
  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;
};

// Index of the largest estimate, earliest on ties.
std::size_t argmax_earliest(std::span<const double> values);

// round(C * n^(2 / (d + delta))), at least 1. delta = 0 gives the d -> 0+ limit.
std::size_t early_stop_step(std::size_t n, std::size_t d, double c, double delta);

// Seeded, disjoint, exhaustive split; the test part has round(fraction * N) rows.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed);

struct TrainResult {
  RatioNet net;  // snapshot at trace.selected_step
  TrainTrace trace;
};

// Optional per-row P-side weights for the training and test sets.
struct SampleWeights {
  std::span<const double> train;
  std::span<const double> test;
};

/// Mini-batch training of the critic against the product-shuffled data.
///
/// Each step draws a P batch from the data rows and a Q batch from the
/// shuffled rows, takes one Adam step on the alpha loss, and at evaluation
/// points scores the full training and test sets. The returned network is
/// the snapshot with the highest test-set estimate. A DivergenceError inside
/// the loop ends the run with stop_reason = divergence instead of
/// propagating.
TrainResult train(const Dataset& train_data, const Dataset& test_data, const VariableLayout& layout,
                  const TrainConfig& cfg, SampleWeights weights = {});

// Splits `data` by cfg.test_fraction first.
TrainResult train(const Dataset& data, const VariableLayout& layout, const TrainConfig& cfg);

// Full-set loss terms of `net` with P rows `p_inputs` and Q rows `q_inputs`.
AlphaLossTerms evaluate_alpha(const RatioNet& net, const Matrix& p_inputs, const Matrix& q_inputs, AlphaParam alpha,
                              std::span<const double> p_weights = {});

}  // namespace nbw
