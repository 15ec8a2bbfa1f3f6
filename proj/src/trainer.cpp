#include "nbw/trainer.hpp"

#include "nbw/errors.hpp"
#include "nbw/rng.hpp"
#include "nbw/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace nbw {

namespace {

enum SeedTag : std::uint64_t {
  kInitTag = 1,
  kTrainShuffleTag = 2,
  kTestShuffleTag = 3,
  kBatchPTag = 4,
  kBatchQTag = 5,
  kSplitTag = 6,
};

std::vector<double> gather(std::span<const double> values, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(values[r]);
  return out;
}

}  // namespace

TrainConfig TrainConfig::divergence_profile() { return TrainConfig{}; }

TrainConfig TrainConfig::causal_profile() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.batch_size = 1000;
  cfg.epochs = 70;
  cfg.hidden.assign(10, 100);
  return cfg;
}

void TrainConfig::validate() const {
  AlphaParam{alpha};
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (eval_every == 0) throw ConfigError("eval_every must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (early_stop) {
    if (!(early_stop->c > 0.0)) throw ConfigError("early_stop.C must be positive");
    if (!(early_stop->delta >= 0.0)) throw ConfigError("early_stop.delta must be nonnegative");
  }
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
  }
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    const auto profile = j.value("profile", std::string("divergence"));
    if (profile == "causal") {
      cfg = causal_profile();
    } else if (profile != "divergence") {
      throw ConfigError("unknown profile '" + profile + "' (expected divergence or causal)");
    }
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("activation")) cfg.activation = activation_from_string(j.at("activation").get<std::string>());
    cfg.reshuffle_each_epoch = j.value("reshuffle_each_epoch", cfg.reshuffle_each_epoch);
    if (j.contains("early_stop") && !j.at("early_stop").is_null()) {
      const auto& es = j.at("early_stop");
      cfg.early_stop = EarlyStop{es.value("C", 1.0), es.value("delta", 0.5)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid training config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = {{"alpha", alpha},
                      {"learning_rate", learning_rate},
                      {"batch_size", batch_size},
                      {"epochs", epochs},
                      {"seed", seed},
                      {"eval_every", eval_every},
                      {"test_fraction", test_fraction},
                      {"hidden", hidden},
                      {"activation", to_string(activation)},
                      {"reshuffle_each_epoch", reshuffle_each_epoch}};
  j["early_stop"] = early_stop ? nlohmann::json{{"C", early_stop->c}, {"delta", early_stop->delta}} : nlohmann::json();
  return j;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid training config: ") + e.what());
  }
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::epochs_exhausted:
      return "epochs_exhausted";
    case StopReason::early_stop_k0:
      return "early_stop_K0";
    case StopReason::divergence:
      return "divergence";
  }
  return "unknown";
}

const TraceRecord& TrainTrace::selected() const {
  for (const auto& r : records) {
    if (r.step == selected_step) return r;
  }
  throw ConfigError("trace has no record for the selected step");
}

std::string TrainTrace::to_csv() const {
  std::string out = "step,train_loss,test_loss,test_estimate\n";
  for (const auto& r : records) {
    out += std::to_string(r.step) + ',' + format_double(r.train_loss) + ',' + format_double(r.test_loss) + ',' +
           format_double(r.test_estimate) + '\n';
  }
  return out;
}

void TrainTrace::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_csv();
}

std::size_t argmax_earliest(std::span<const double> values) {
  if (values.empty()) throw ConfigError("argmax of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t early_stop_step(std::size_t n, std::size_t d, double c, double delta) {
  if (n < 2) throw ConfigError("early stop needs n >= 2");
  if (d < 1) throw ConfigError("early stop needs d >= 1");
  if (!(c > 0.0) || !(delta >= 0.0)) throw ConfigError("early stop needs C > 0 and delta >= 0");
  const double k0 = c * std::pow(static_cast<double>(n), 2.0 / (static_cast<double>(d) + delta));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(k0)));
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  const auto n = data.n_rows();
  const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) {
    throw ConfigError("split of " + std::to_string(n) + " rows at fraction " + std::to_string(fraction) +
                      " leaves an empty part");
  }
  RandomStream rng(derive_seed(seed, kSplitTag));
  auto perm = rng.permutation(n);
  std::vector<std::size_t> train_rows(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test_rows(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.select_rows(train_rows), data.select_rows(test_rows)};
}

AlphaLossTerms evaluate_alpha(const RatioNet& net, const Matrix& p_inputs, const Matrix& q_inputs, AlphaParam alpha,
                              std::span<const double> p_weights) {
  const Vector tp = net.forward(p_inputs);
  const Vector tq = net.forward(q_inputs);
  return alpha_loss({tp.data(), static_cast<std::size_t>(tp.size())}, {tq.data(), static_cast<std::size_t>(tq.size())},
                    alpha, p_weights);
}

TrainResult train(const Dataset& train_data, const Dataset& test_data, const VariableLayout& layout,
                  const TrainConfig& cfg, SampleWeights weights) {
  cfg.validate();
  layout.validate(train_data.n_cols());
  layout.validate(test_data.n_cols());
  if (train_data.n_cols() != test_data.n_cols()) throw ConfigError("train and test sets differ in width");
  const auto n = train_data.n_rows();
  if (n < 2) throw ConfigError("training needs at least two rows");
  if (cfg.batch_size > n) {
    throw ConfigError("batch size " + std::to_string(cfg.batch_size) + " exceeds " + std::to_string(n) +
                      " training rows");
  }
  if (!weights.train.empty() && weights.train.size() != n) throw ConfigError("training weights do not match rows");
  if (!weights.test.empty() && weights.test.size() != test_data.n_rows()) {
    throw ConfigError("test weights do not match rows");
  }
  if (weights.train.empty() != weights.test.empty()) {
    throw ConfigError("weights must be given for both training and test sets or neither");
  }

  const AlphaParam alpha(cfg.alpha);
  const Matrix p_train = critic_inputs(train_data, layout);
  const Matrix p_test = critic_inputs(test_data, layout);
  const auto train_shuffle_seed = derive_seed(cfg.seed, kTrainShuffleTag);
  Matrix q_train = critic_inputs(product_shuffle(train_data, layout, train_shuffle_seed).materialize(), layout);
  const Matrix q_test =
      critic_inputs(product_shuffle(test_data, layout, derive_seed(cfg.seed, kTestShuffleTag)).materialize(), layout);

  std::vector<std::size_t> dims = {layout.input_width()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(1);
  RatioNet net = RatioNet::init(dims, cfg.activation, derive_seed(cfg.seed, kInitTag));
  RatioNet best = net;
  AdamState adam = AdamState::for_net(net, cfg.learning_rate);

  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t max_steps = cfg.epochs * steps_per_epoch;
  StopReason natural_stop = StopReason::epochs_exhausted;
  if (cfg.early_stop) {
    const auto k0 = early_stop_step(n, layout.input_width(), cfg.early_stop->c, cfg.early_stop->delta);
    if (k0 < max_steps) {
      max_steps = k0;
      natural_stop = StopReason::early_stop_k0;
    }
  }

  TrainTrace trace;
  double best_estimate = -std::numeric_limits<double>::infinity();
  auto evaluate = [&](std::size_t step) {
    const auto train_terms = evaluate_alpha(net, p_train, q_train, alpha, weights.train);
    const auto test_terms = evaluate_alpha(net, p_test, q_test, alpha, weights.test);
    trace.records.push_back({step, train_terms.loss, test_terms.loss, test_terms.estimate});
    if (test_terms.estimate > best_estimate) {
      best_estimate = test_terms.estimate;
      trace.selected_step = step;
      best = net;
    }
  };

  evaluate(0);
  trace.stop_reason = natural_stop;
  const auto p_batch_seed = derive_seed(cfg.seed, kBatchPTag);
  const auto q_batch_seed = derive_seed(cfg.seed, kBatchQTag);
  std::size_t step = 0;
  try {
    for (std::size_t epoch = 0; step < max_steps; ++epoch) {
      if (cfg.reshuffle_each_epoch && epoch > 0) {
        q_train = critic_inputs(
            product_shuffle(train_data, layout, derive_seed(train_shuffle_seed, epoch)).materialize(), layout);
      }
      const auto p_batches = minibatch_indices(n, cfg.batch_size, p_batch_seed, epoch);
      const auto q_batches = minibatch_indices(n, cfg.batch_size, q_batch_seed, epoch);
      for (std::size_t b = 0; b < p_batches.size() && step < max_steps; ++b) {
        const Matrix bp = gather_rows(p_train, p_batches[b]);
        const Matrix bq = gather_rows(q_train, q_batches[b]);
        const auto bw = weights.train.empty() ? std::vector<double>{} : gather(weights.train, p_batches[b]);
        const auto g = backward_alpha(net, bp, bq, alpha, bw);
        adam_step(adam, net, g.gradient);
        ++step;
        if (step % cfg.eval_every == 0 || step == max_steps) evaluate(step);
      }
    }
  } catch (const DivergenceError& e) {
    trace.stop_reason = StopReason::divergence;
    trace.divergence_magnitude = e.magnitude();
    trace.divergence_message = e.what();
  }
  return TrainResult{std::move(best), std::move(trace)};
}

TrainResult train(const Dataset& data, const VariableLayout& layout, const TrainConfig& cfg) {
  cfg.validate();
  auto [train_part, test_part] = split(data, cfg.test_fraction, cfg.seed);
  return train(train_part, test_part, layout, cfg);
}

}  // namespace nbw
