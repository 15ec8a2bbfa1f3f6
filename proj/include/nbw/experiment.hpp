#pragma once

#include "nbw/synth.hpp"
#include "nbw/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nbw {

enum class ExperimentKind { alpha_sweep, dim_sweep, causal };
std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// Batch protocol over a grid of settings and replicate seeds.
///
/// alpha-sweep: grid holds alpha values on the equicorrelated Gaussian (d, rho).
/// dim-sweep:   grid holds dimensions d at fixed alpha and rho.
/// causal:      grid holds sample sizes N for the causal benchmark.
/// Gaussian cells draw n training and n test rows independently.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::alpha_sweep;
  std::vector<double> grid;
  std::size_t replicates = 20;
  std::uint64_t seed = 0;
  std::size_t d = 5;
  double rho = 0.8;
  std::size_t n = 5000;
  double alpha = 0.5;
  CausalMode mode = CausalMode::exp1;
  TrainConfig train;

  void validate() const;
  // Keys: experiment, grid, replicates, seed, d, rho, n, alpha, mode, train.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct CellResult {
  std::string key;  // sortable, e.g. "alpha=+00000.50000/rep=0003"
  double grid_value = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;  // configuration failure inside the cell
  TrainTrace trace;
  double oracle = 0.0;  // Gaussian cells: closed-form I_alpha (may be +inf)
  std::size_t k_max = 0;
  // Causal cells.
  double rmse_unweighted = 0.0;
  double rmse_nbw = 0.0;
  double ess = 0.0;
  // Weights of the selected critic on the training rows, for invariant checks:
  // shift gap is the max change when a constant is added to the critic output.
  bool weights_finite = false;
  double weight_mean = 0.0;
  double weight_min = 0.0;
  double weight_max = 0.0;
  double weight_shift_gap = 0.0;

  nlohmann::json to_json() const;
};

// One cell, deterministic in (cfg, grid value, replicate).
CellResult run_cell(const ExperimentConfig& cfg, double grid_value, std::size_t replicate);

// All cells, fanned out over `threads` workers (0 = NBW_THREADS or hardware
// concurrency). Results are sorted by key.
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0);

// Worker count from NBW_THREADS, else hardware concurrency, at least 1.
std::size_t default_thread_count();

// Nearest-rank percentile of a nonempty sample, p in [0, 100].
double nearest_rank_percentile(std::vector<double> values, double p);

struct BandRow {
  double grid_value = 0.0;
  std::size_t step = 0;
  std::size_t runs = 0;
  double median = 0.0;
  double p5 = 0.0, p45 = 0.0, p55 = 0.0, p95 = 0.0;
};

// Per grid value and evaluation step, bands of the test estimate across replicates.
std::vector<BandRow> aggregate_bands(const std::vector<CellResult>& cells);

struct CausalRow {
  double n = 0.0;
  std::string method;
  double mean_rmse = 0.0;
  double std_error = 0.0;
  std::size_t replicates = 0;
};
std::vector<CausalRow> aggregate_causal(const std::vector<CellResult>& cells);

// cells/<key>.json, aggregate.csv, plus kmax.csv (dim-sweep) or rmse.csv (causal).
void write_experiment(const ExperimentConfig& cfg, const std::vector<CellResult>& cells,
                      const std::filesystem::path& out_dir);

}  // namespace nbw
