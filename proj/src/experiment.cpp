#include "nbw/experiment.hpp"

#include "nbw/balancing.hpp"
#include "nbw/effect.hpp"
#include "nbw/errors.hpp"
#include "nbw/oracle.hpp"
#include "nbw/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace nbw {

namespace {

enum CellTag : std::uint64_t { kTrainDataTag = 0x4454, kTestDataTag = 0x5444, kValidDataTag = 0x5644, kCellTag = 0x43 };

std::string grid_label(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::alpha_sweep: return "alpha";
    case ExperimentKind::dim_sweep: return "d";
    case ExperimentKind::causal: return "n";
  }
  return "x";
}

std::string cell_key(ExperimentKind kind, double value, std::size_t rep) {
  char buf[96];
  // Fixed-width fields keep lexical order equal to numeric order for the grids in use.
  std::snprintf(buf, sizeof buf, "%s=%+012.5f/rep=%04zu", grid_label(kind).c_str(), value, rep);
  return buf;
}

RatioNet shift_output(const RatioNet& net, double c) {
  auto layers = net.layers();
  layers.back().bias(0) += c;
  return RatioNet(net.dims(), net.activation(), std::move(layers));
}

void record_weights(CellResult& cell, const RatioNet& net, const Dataset& data, const VariableLayout& layout) {
  const auto w = compute_weights(net, data, layout);
  const auto shifted = compute_weights(shift_output(net, 123.0), data, layout);
  cell.weights_finite = w.values.allFinite();
  cell.weight_mean = w.values.mean();
  cell.weight_min = w.values.minCoeff();
  cell.weight_max = w.values.maxCoeff();
  cell.weight_shift_gap = (w.values - shifted.values).cwiseAbs().maxCoeff();
}

std::size_t as_count(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(std::string(what) + " grid values must be positive integers");
  return static_cast<std::size_t>(v);
}

CellResult run_gaussian_cell(const ExperimentConfig& cfg, double value, std::size_t rep, CellResult cell) {
  GaussianSpec spec{cfg.d, cfg.rho};
  TrainConfig tc = cfg.train;
  tc.seed = cell.seed;
  if (cfg.kind == ExperimentKind::alpha_sweep) {
    tc.alpha = value;
  } else {
    spec.d = as_count(value, "dimension");
    tc.alpha = cfg.alpha;
  }
  spec.validate();
  // The same replicate draws the same data at every alpha.
  const auto data_seed = derive_seed(cfg.seed, rep);
  const auto train_data = gen_gaussian(spec, cfg.n, derive_seed(data_seed, kTrainDataTag + spec.d));
  const auto test_data = gen_gaussian(spec, cfg.n, derive_seed(data_seed, kTestDataTag + spec.d));
  const auto layout = per_coordinate_layout(spec.d);
  auto result = train(train_data, test_data, layout, tc);
  cell.oracle = alpha_information(spec, AlphaParam(tc.alpha));
  cell.k_max = result.trace.selected_step;
  record_weights(cell, result.net, train_data, layout);
  cell.trace = std::move(result.trace);
  return cell;
}

CellResult run_causal_cell(const ExperimentConfig& cfg, double value, std::size_t rep, CellResult cell) {
  const auto n = as_count(value, "sample size");
  const auto data_seed = derive_seed(cfg.seed, rep);
  const auto train_set = gen_causal_train(n, derive_seed(data_seed, kTrainDataTag));
  const auto valid_set = gen_causal_train(n, derive_seed(data_seed, kValidDataTag));
  const auto test_set = gen_causal_test(n, derive_seed(data_seed, kTestDataTag), cfg.mode);
  const auto layout = causal_layout(cfg.mode);
  TrainConfig tc = cfg.train;
  tc.seed = cell.seed;
  auto result = train(train_set.observed, valid_set.observed, layout, tc);
  const auto w = compute_weights(result.net, train_set.observed, layout);
  record_weights(cell, result.net, train_set.observed, layout);

  const auto& names = train_set.observed.column_names();
  std::vector<std::string> features(names.begin(), names.end() - 1);  // all but Y
  std::vector<std::size_t> idx;
  for (const auto& f : features) idx.push_back(train_set.observed.column_index(f));
  const Matrix x = train_set.observed.select_columns(idx).values();
  const Vector y = train_set.observed.column("Y");
  const auto plain = weighted_linear_regression(x, y, {});
  const auto weighted = weighted_linear_regression(x, y, w.span());
  cell.rmse_unweighted = evaluate_cace(plain, test_set.observed, features, "Y_true").rmse_vs_truth;
  cell.rmse_nbw = evaluate_cace(weighted, test_set.observed, features, "Y_true").rmse_vs_truth;
  cell.ess = effective_sample_size(w);
  cell.k_max = result.trace.selected_step;
  cell.trace = std::move(result.trace);
  return cell;
}

std::string csv_number(double v) { return format_double(v); }

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::alpha_sweep: return "alpha-sweep";
    case ExperimentKind::dim_sweep: return "dim-sweep";
    case ExperimentKind::causal: return "causal";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "alpha-sweep") return ExperimentKind::alpha_sweep;
  if (s == "dim-sweep") return ExperimentKind::dim_sweep;
  if (s == "causal") return ExperimentKind::causal;
  throw ConfigError("unknown experiment '" + s + "' (expected alpha-sweep, dim-sweep or causal)");
}

void ExperimentConfig::validate() const {
  if (grid.empty()) throw ConfigError("experiment grid must not be empty");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (n < 2) throw ConfigError("n must be at least 2");
  for (double g : grid) {
    if (!std::isfinite(g)) throw ConfigError("grid values must be finite");
    if (kind == ExperimentKind::alpha_sweep) AlphaParam{g};
    else as_count(g, kind == ExperimentKind::dim_sweep ? "dimension" : "sample size");
  }
  if (kind != ExperimentKind::causal) GaussianSpec{d, rho}.validate();
  if (kind == ExperimentKind::dim_sweep) AlphaParam{alpha};
  train.validate();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    c.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("d")) c.d = j.at("d").get<std::size_t>();
    if (j.contains("rho")) c.rho = j.at("rho").get<double>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("mode")) c.mode = causal_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("train")) {
      c.train = TrainConfig::from_json(j.at("train"));
    } else if (c.kind == ExperimentKind::causal) {
      c.train = TrainConfig::causal_profile();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", to_string(kind)},
          {"grid", grid},
          {"replicates", replicates},
          {"seed", seed},
          {"d", d},
          {"rho", rho},
          {"n", n},
          {"alpha", alpha},
          {"mode", mode == CausalMode::exp1 ? "exp1" : "exp2"},
          {"train", train.to_json()}};
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("experiment config '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

nlohmann::json CellResult::to_json() const {
  nlohmann::json j = {{"key", key},
                      {"grid_value", grid_value},
                      {"replicate", replicate},
                      {"seed", seed},
                      {"k_max", k_max}};
  if (error) {
    j["error"] = *error;
    return j;
  }
  j["stop_reason"] = to_string(trace.stop_reason);
  if (trace.divergence_magnitude) {
    j["divergence_message"] = trace.divergence_message;
    const double m = *trace.divergence_magnitude;
    j["divergence_magnitude"] = std::isfinite(m) ? nlohmann::json(m) : nlohmann::json(nullptr);
  }
  j["max_test_estimate"] = trace.max_test_estimate();
  j["final_test_estimate"] = trace.records.back().test_estimate;
  j["oracle"] = std::isfinite(oracle) ? nlohmann::json(oracle) : nlohmann::json("inf");
  j["weights"] = {{"finite", weights_finite}, {"mean", weight_mean}, {"min", weight_min}, {"max", weight_max},
                  {"shift_gap", weight_shift_gap}};
  if (rmse_unweighted > 0.0) {
    j["rmse_unweighted"] = rmse_unweighted;
    j["rmse_nbw"] = rmse_nbw;
    j["ess"] = ess;
  }
  nlohmann::json steps = nlohmann::json::array(), est = nlohmann::json::array();
  for (const auto& r : trace.records) {
    steps.push_back(r.step);
    est.push_back(r.test_estimate);
  }
  j["trace"] = {{"step", steps}, {"test_estimate", est}};
  return j;
}

CellResult run_cell(const ExperimentConfig& cfg, double grid_value, std::size_t replicate) {
  CellResult cell;
  cell.key = cell_key(cfg.kind, grid_value, replicate);
  cell.grid_value = grid_value;
  cell.replicate = replicate;
  cell.seed = derive_seed(derive_seed(cfg.seed, kCellTag), replicate);
  try {
    if (cfg.kind == ExperimentKind::causal) return run_causal_cell(cfg, grid_value, replicate, std::move(cell));
    return run_gaussian_cell(cfg, grid_value, replicate, std::move(cell));
  } catch (const ConfigError& e) {
    cell.error = e.what();
    return cell;
  }
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("NBW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw ConfigError(std::string("NBW_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  cfg.validate();
  std::vector<std::pair<double, std::size_t>> jobs;
  for (double g : cfg.grid)
    for (std::size_t r = 0; r < cfg.replicates; ++r) jobs.emplace_back(g, r);
  std::vector<CellResult> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) out[i] = run_cell(cfg, jobs[i].first, jobs[i].second);
  };
  const std::size_t n_workers = std::min(threads == 0 ? default_thread_count() : threads, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::sort(out.begin(), out.end(), [](const CellResult& a, const CellResult& b) { return a.key < b.key; });
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

std::vector<BandRow> aggregate_bands(const std::vector<CellResult>& cells) {
  std::map<std::pair<double, std::size_t>, std::vector<double>> by_step;
  for (const auto& c : cells) {
    if (c.error) continue;
    for (const auto& r : c.trace.records) by_step[{c.grid_value, r.step}].push_back(r.test_estimate);
  }
  std::vector<BandRow> rows;
  for (const auto& [k, v] : by_step) {
    BandRow b;
    b.grid_value = k.first;
    b.step = k.second;
    b.runs = v.size();
    b.median = nearest_rank_percentile(v, 50);
    b.p5 = nearest_rank_percentile(v, 5);
    b.p45 = nearest_rank_percentile(v, 45);
    b.p55 = nearest_rank_percentile(v, 55);
    b.p95 = nearest_rank_percentile(v, 95);
    rows.push_back(b);
  }
  return rows;
}

std::vector<CausalRow> aggregate_causal(const std::vector<CellResult>& cells) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_n;
  for (const auto& c : cells) {
    if (c.error) continue;
    by_n[c.grid_value].first.push_back(c.rmse_unweighted);
    by_n[c.grid_value].second.push_back(c.rmse_nbw);
  }
  auto summarize = [](double n, const std::string& method, const std::vector<double>& v) {
    CausalRow r;
    r.n = n;
    r.method = method;
    r.replicates = v.size();
    double s = 0;
    for (double x : v) s += x;
    r.mean_rmse = s / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0;
      for (double x : v) ss += (x - r.mean_rmse) * (x - r.mean_rmse);
      r.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return r;
  };
  std::vector<CausalRow> rows;
  for (const auto& [n, v] : by_n) {
    rows.push_back(summarize(n, "unweighted-LR", v.first));
    rows.push_back(summarize(n, "NBW-LR", v.second));
  }
  return rows;
}

void write_experiment(const ExperimentConfig& cfg, const std::vector<CellResult>& cells,
                      const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "cells", ec);
  if (ec) throw ConfigError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream o(p);
    if (!o) throw ConfigError("cannot write '" + p.string() + "'");
    o << text;
  };
  write(out_dir / "config.json", cfg.to_json().dump(2) + "\n");
  for (const auto& c : cells) {
    std::string name = c.key;
    std::replace(name.begin(), name.end(), '/', '_');
    write(out_dir / "cells" / (name + ".json"), c.to_json().dump(2) + "\n");
  }

  const std::string label = grid_label(cfg.kind);
  std::ostringstream agg;
  agg << label << ",step,runs,median,p5,p45,p55,p95\n";
  for (const auto& b : aggregate_bands(cells)) {
    agg << csv_number(b.grid_value) << ',' << b.step << ',' << b.runs << ',' << csv_number(b.median) << ','
        << csv_number(b.p5) << ',' << csv_number(b.p45) << ',' << csv_number(b.p55) << ',' << csv_number(b.p95)
        << '\n';
  }
  write(out_dir / "aggregate.csv", agg.str());

  if (cfg.kind == ExperimentKind::dim_sweep) {
    std::ostringstream k;
    k << "d,replicate,k_max,stop_reason\n";
    std::map<double, std::vector<double>> per_d;
    for (const auto& c : cells) {
      if (c.error) continue;
      k << csv_number(c.grid_value) << ',' << c.replicate << ',' << c.k_max << ',' << to_string(c.trace.stop_reason)
        << '\n';
      per_d[c.grid_value].push_back(static_cast<double>(c.k_max));
    }
    write(out_dir / "kmax.csv", k.str());
    std::ostringstream s;
    s << "d,median_k_max,early_stop_k0\n";
    for (const auto& [d, v] : per_d) {
      s << csv_number(d) << ',' << csv_number(nearest_rank_percentile(v, 50)) << ','
        << early_stop_step(cfg.n, static_cast<std::size_t>(d), 1.0, 0.0) << '\n';
    }
    write(out_dir / "kmax_summary.csv", s.str());
  }
  if (cfg.kind == ExperimentKind::causal) {
    std::ostringstream r;
    r << "n,method,mean_rmse,std_error,replicates\n";
    for (const auto& row : aggregate_causal(cells)) {
      r << csv_number(row.n) << ',' << row.method << ',' << csv_number(row.mean_rmse) << ','
        << csv_number(row.std_error) << ',' << row.replicates << '\n';
    }
    write(out_dir / "rmse.csv", r.str());
  }
}

}  // namespace nbw
