// nbw: train balancing critics, compute weights, check balance, estimate
// effects, generate benchmark data, and run batch experiments.
//
// Exit codes: 0 ok, 2 configuration or parse error, 3 numerical divergence.

#include "nbw/balancing.hpp"
#include "nbw/dataset.hpp"
#include "nbw/effect.hpp"
#include "nbw/errors.hpp"
#include "nbw/experiment.hpp"
#include "nbw/oracle.hpp"
#include "nbw/rng.hpp"
#include "nbw/synth.hpp"
#include "nbw/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace nbw;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

// Raised by a command that completed its outputs but hit a divergence signal.
struct DivergenceExit {
  std::string message;
};

void report_error(bool as_json, const std::string& kind, const std::string& message, int code) {
  if (as_json) {
    nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "nbw: " << message << '\n';
  }
}

Matrix parse_matrix(const std::string& text, const std::string& what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty JSON array of rows");
  const auto rows = j.size();
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(what + " rows must be nonempty arrays");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(what + " is not rectangular");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ConfigError(what + " entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

Vector parse_vector(const std::string& text, const std::string& what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty JSON array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Matrix feature_matrix(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(d.column_index(n));
  return d.select_columns(idx).values();
}

BalancingWeights load_weights_for(const fs::path& path, const Dataset& data, const std::string& what) {
  auto w = BalancingWeights::load_csv(path);
  if (w.size() != data.n_rows()) {
    throw ConfigError(what + " has " + std::to_string(w.size()) + " rows but the data has " +
                      std::to_string(data.n_rows()));
  }
  return w;
}

// --- commands ---------------------------------------------------------------

struct TrainArgs {
  std::string data, test_data, layout, config, out_model, out_trace;
};

void cmd_train(const TrainArgs& a) {
  const auto data = load_csv(a.data);
  const auto layout = VariableLayout::load(a.layout);
  const auto cfg = TrainConfig::load(a.config);
  TrainResult r = a.test_data.empty() ? train(data, layout, cfg) : train(data, load_csv(a.test_data), layout, cfg);
  r.net.save(a.out_model);
  r.trace.save_csv(a.out_trace);
  const auto& sel = r.trace.selected();
  std::cout << "selected_step " << sel.step << " test_estimate " << format_double(sel.test_estimate)
            << " stop_reason " << to_string(r.trace.stop_reason) << '\n';
  if (r.trace.stop_reason == StopReason::divergence) throw DivergenceExit{r.trace.divergence_message};
}

struct WeightsArgs {
  std::string model, data, layout, out;
};

void cmd_weights(const WeightsArgs& a) {
  const auto net = RatioNet::load(a.model);
  const auto data = load_csv(a.data);
  const auto layout = VariableLayout::load(a.layout);
  const auto w = compute_weights(net, data, layout, a.model);
  w.save_csv(a.out);
  std::cout << "rows " << w.size() << " ess " << format_double(effective_sample_size(w)) << " max "
            << format_double(w.values.maxCoeff()) << '\n';
}

struct BalanceArgs {
  std::string data, test_data, layout, config, model, weights, test_weights, out;
};

void cmd_check_balance(const BalanceArgs& a) {
  const auto data = load_csv(a.data);
  const auto test = load_csv(a.test_data);
  const auto layout = VariableLayout::load(a.layout);
  const auto cfg = TrainConfig::load(a.config);
  BalanceReport rep;
  if (!a.model.empty()) {
    if (!a.weights.empty() || !a.test_weights.empty()) throw ConfigError("give either --model or --weights, not both");
    rep = check_balance(data, test, layout, RatioNet::load(a.model), cfg);
  } else {
    if (a.weights.empty() || a.test_weights.empty()) {
      throw ConfigError("check-balance needs --model, or both --weights and --test-weights");
    }
    rep = check_balance(data, test, layout, load_weights_for(a.weights, data, "weights file"),
                        load_weights_for(a.test_weights, test, "test weights file"), cfg);
  }
  const auto j = rep.to_json();
  if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
}

struct EffectArgs {
  std::string data, test_data, weights, features, target, truth, learner = "linear", predictions;
  std::uint64_t seed = 0;
};

void cmd_effect(const EffectArgs& a) {
  const auto data = load_csv(a.data);
  const auto test = load_csv(a.test_data);
  const auto features = split_names(a.features);
  const Matrix x = feature_matrix(data, features);
  const Vector y = data.column(a.target);
  std::optional<BalancingWeights> w;
  if (!a.weights.empty()) w = load_weights_for(a.weights, data, "weights file");
  const std::span<const double> ws = w ? w->span() : std::span<const double>{};
  EffectModel model;
  if (a.learner == "linear") {
    model = weighted_linear_regression(x, y, ws);
  } else if (a.learner == "mlp") {
    MlpProfile prof;
    prof.seed = a.seed;
    model = weighted_mlp_train(x, y, ws, prof);
  } else {
    throw ConfigError("unknown learner '" + a.learner + "' (expected linear or mlp)");
  }
  const auto est = evaluate_cace(model, test, features, a.truth);
  if (!a.predictions.empty()) {
    Matrix p(est.predictions.size(), 1);
    p.col(0) = est.predictions;
    save_csv(Dataset(p, {"prediction"}), a.predictions);
  }
  std::cout << est.to_json().dump(2) << '\n';
}

struct SynthArgs {
  std::size_t n = 1000, d = 2;
  double rho = 0.8;
  std::uint64_t seed = 0;
  std::string mode = "exp1", out, out_prefix;
  double beta1 = 1.0, beta2 = -0.5;
};

void cmd_synth_gaussian(const SynthArgs& a) {
  save_csv(gen_gaussian({a.d, a.rho}, a.n, a.seed), a.out);
  const auto stem = fs::path(a.out).replace_extension("").string();
  write_text(stem + ".layout.json", per_coordinate_layout(a.d).to_json().dump(2) + "\n");
}

void cmd_synth_causal(const SynthArgs& a) {
  const auto mode = causal_mode_from_string(a.mode);
  const auto train_set = gen_causal_train(a.n, a.seed);
  const auto test_set = gen_causal_test(a.n, derive_seed(a.seed, 0x7E57), mode);
  const std::string p = a.out_prefix;
  save_csv(train_set.observed, p + ".train.csv");
  save_csv(train_set.latent, p + ".train.latent.csv");
  save_csv(test_set.observed, p + ".test.csv");
  save_csv(test_set.latent, p + ".test.latent.csv");
  write_text(p + ".layout.json", causal_layout(mode).to_json().dump(2) + "\n");
  std::cout << "wrote " << p << ".{train,test}.csv, " << p << ".{train,test}.latent.csv, " << p << ".layout.json\n";
}

void cmd_synth_logistic(const SynthArgs& a) {
  const auto l = gen_logistic_binary(a.n, a.seed, a.beta1, a.beta2);
  save_csv(l.data, a.out);
  Matrix lat(l.propensity.size(), 2);
  lat.col(0) = l.propensity;
  lat.col(1) = l.stabilized_weights;
  const auto stem = fs::path(a.out).replace_extension("").string();
  save_csv(Dataset(lat, {"propensity", "stabilized_weight"}), stem + ".latent.csv");
  write_text(stem + ".layout.json", logistic_layout().to_json().dump(2) + "\n");
}

void cmd_experiment(const std::string& config, const std::string& out) {
  const auto cfg = ExperimentConfig::load(config);
  const auto cells = run_experiment(cfg);
  write_experiment(cfg, cells, out);
  std::size_t failed = 0, diverged = 0;
  for (const auto& c : cells) {
    if (c.error) ++failed;
    else if (c.trace.stop_reason == StopReason::divergence) ++diverged;
  }
  std::cout << "cells " << cells.size() << " failed " << failed << " diverged " << diverged << '\n';
}

struct OracleArgs {
  std::string q_cov, p_cov, x;
  std::optional<std::size_t> d;
  std::optional<double> rho;
  double alpha = 0.5;
};

void cmd_oracle_alpha_div(const OracleArgs& a) {
  double v;
  if (a.d || a.rho) {
    if (!a.d || !a.rho) throw ConfigError("--d and --rho go together");
    if (!a.q_cov.empty() || !a.p_cov.empty()) throw ConfigError("give either --d/--rho or --q-cov/--p-cov");
    GaussianSpec spec{*a.d, *a.rho};
    spec.validate();
    v = alpha_information(spec, AlphaParam(a.alpha));
  } else {
    if (a.q_cov.empty() || a.p_cov.empty()) throw ConfigError("oracle alpha-div needs --d/--rho or --q-cov/--p-cov");
    ZeroMeanGaussian q(parse_matrix(a.q_cov, "--q-cov")), p(parse_matrix(a.p_cov, "--p-cov"));
    if (q.dim() != p.dim()) throw ConfigError("covariances differ in dimension");
    v = alpha_divergence(q, p, AlphaParam(a.alpha));
  }
  std::cout << (std::isfinite(v) ? format_double(v) : std::string("inf")) << '\n';
}

void cmd_oracle_log_ratio(const OracleArgs& a) {
  ZeroMeanGaussian q(parse_matrix(a.q_cov, "--q-cov")), p(parse_matrix(a.p_cov, "--p-cov"));
  std::cout << format_double(log_density_ratio(q, p, parse_vector(a.x, "--x"))) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural balancing weights: critic training, weights, balance checks, effects, experiments"};
  app.require_subcommand(1);
  bool errors_json = false;
  app.add_flag("--errors-json", errors_json, "Print errors as a JSON object on standard error");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a critic and write the selected model and its trace");
  train_cmd->add_option("--data", ta.data, "Training CSV")->required();
  train_cmd->add_option("--test-data", ta.test_data, "Test CSV (default: split --data by test_fraction)");
  train_cmd->add_option("--layout", ta.layout, "Layout JSON")->required();
  train_cmd->add_option("--config", ta.config, "Training config JSON")->required();
  train_cmd->add_option("--out-model", ta.out_model, "Model JSON to write")->required();
  train_cmd->add_option("--out-trace", ta.out_trace, "Trace CSV to write")->required();

  WeightsArgs wa;
  auto* weights_cmd = app.add_subcommand("weights", "Compute balancing weights from a trained critic");
  weights_cmd->add_option("--model", wa.model)->required();
  weights_cmd->add_option("--data", wa.data)->required();
  weights_cmd->add_option("--layout", wa.layout)->required();
  weights_cmd->add_option("--out", wa.out, "Weights CSV to write")->required();

  BalanceArgs ba;
  auto* balance_cmd = app.add_subcommand("check-balance", "Estimate the remaining dependence after weighting");
  balance_cmd->add_option("--data", ba.data)->required();
  balance_cmd->add_option("--test-data", ba.test_data)->required();
  balance_cmd->add_option("--layout", ba.layout)->required();
  balance_cmd->add_option("--config", ba.config, "Checker training config JSON")->required();
  balance_cmd->add_option("--model", ba.model, "Balancing critic; weights both sets");
  balance_cmd->add_option("--weights", ba.weights, "Weights CSV for --data");
  balance_cmd->add_option("--test-weights", ba.test_weights, "Weights CSV for --test-data");
  balance_cmd->add_option("--out", ba.out, "Report JSON to write");

  EffectArgs ea;
  auto* effect_cmd = app.add_subcommand("effect", "Fit a weighted outcome model and score it against the truth");
  effect_cmd->add_option("--data", ea.data)->required();
  effect_cmd->add_option("--test-data", ea.test_data)->required();
  effect_cmd->add_option("--features", ea.features, "Comma-separated feature columns")->required();
  effect_cmd->add_option("--target", ea.target, "Outcome column in --data")->required();
  effect_cmd->add_option("--truth", ea.truth, "Noiseless outcome column in --test-data")->required();
  effect_cmd->add_option("--weights", ea.weights, "Weights CSV (default: unit weights)");
  effect_cmd->add_option("--learner", ea.learner, "linear or mlp");
  effect_cmd->add_option("--seed", ea.seed);
  effect_cmd->add_option("--predictions", ea.predictions, "Predictions CSV to write");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate benchmark data");
  synth_cmd->require_subcommand(1);
  auto* gaussian_cmd = synth_cmd->add_subcommand("gaussian", "Equicorrelated zero-mean Gaussian");
  gaussian_cmd->add_option("--d", sa.d)->required();
  gaussian_cmd->add_option("--rho", sa.rho)->required();
  gaussian_cmd->add_option("--n", sa.n)->required();
  gaussian_cmd->add_option("--seed", sa.seed);
  gaussian_cmd->add_option("--out", sa.out)->required();
  auto* causal_cmd = synth_cmd->add_subcommand("causal", "Causal benchmark: train, test and latent files");
  causal_cmd->add_option("--n", sa.n)->required();
  causal_cmd->add_option("--seed", sa.seed);
  causal_cmd->add_option("--mode", sa.mode, "exp1 or exp2");
  causal_cmd->add_option("--out-prefix", sa.out_prefix)->required();
  auto* logistic_cmd = synth_cmd->add_subcommand("logistic", "Binary treatment with a logistic propensity");
  logistic_cmd->add_option("--n", sa.n)->required();
  logistic_cmd->add_option("--seed", sa.seed);
  logistic_cmd->add_option("--beta1", sa.beta1);
  logistic_cmd->add_option("--beta2", sa.beta2);
  logistic_cmd->add_option("--out", sa.out)->required();

  std::string exp_config, exp_out;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a batch experiment (worker count from NBW_THREADS)");
  exp_cmd->add_option("--config", exp_config)->required();
  exp_cmd->add_option("--out", exp_out, "Results directory")->required();

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form Gaussian quantities");
  oracle_cmd->require_subcommand(1);
  auto* adiv_cmd = oracle_cmd->add_subcommand("alpha-div", "D_alpha(Q || P) for zero-mean Gaussians");
  adiv_cmd->add_option("--q-cov", oa.q_cov, "JSON matrix");
  adiv_cmd->add_option("--p-cov", oa.p_cov, "JSON matrix");
  adiv_cmd->add_option("--d", oa.d, "Dimension of the equicorrelated joint (information mode)");
  adiv_cmd->add_option("--rho", oa.rho);
  adiv_cmd->add_option("--alpha", oa.alpha);
  auto* lr_cmd = oracle_cmd->add_subcommand("log-ratio", "log q(x) - log p(x)");
  lr_cmd->add_option("--q-cov", oa.q_cov)->required();
  lr_cmd->add_option("--p-cov", oa.p_cov)->required();
  lr_cmd->add_option("--x", oa.x, "JSON vector")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(errors_json, "usage", e.what(), kExitConfig);
    return kExitConfig;
  }

  try {
    if (*train_cmd) cmd_train(ta);
    else if (*weights_cmd) cmd_weights(wa);
    else if (*balance_cmd) cmd_check_balance(ba);
    else if (*effect_cmd) cmd_effect(ea);
    else if (*gaussian_cmd) cmd_synth_gaussian(sa);
    else if (*causal_cmd) cmd_synth_causal(sa);
    else if (*logistic_cmd) cmd_synth_logistic(sa);
    else if (*exp_cmd) cmd_experiment(exp_config, exp_out);
    else if (*adiv_cmd) cmd_oracle_alpha_div(oa);
    else if (*lr_cmd) cmd_oracle_log_ratio(oa);
  } catch (const DivergenceExit& e) {
    report_error(errors_json, "divergence", "training diverged: " + e.message, kExitDivergence);
    return kExitDivergence;
  } catch (const ParseError& e) {
    report_error(errors_json, "parse", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const ConfigError& e) {
    report_error(errors_json, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const DivergenceError& e) {
    report_error(errors_json, "divergence", e.what(), kExitDivergence);
    return kExitDivergence;
  } catch (const NumericalError& e) {
    report_error(errors_json, "numerical", e.what(), kExitDivergence);
    return kExitDivergence;
  }
  return 0;
}
