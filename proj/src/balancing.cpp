#include "nbw/balancing.hpp"

#include "nbw/errors.hpp"
#include "nbw/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace nbw {

namespace {

constexpr std::uint64_t kCheckerTag = 0x434B;  // "CK"

}  // namespace

BalancingWeights BalancingWeights::from_values(Vector values, std::string source) {
  if (values.size() == 0) throw ConfigError("weights must be nonempty");
  if (!values.allFinite() || (values.array() < 0.0).any()) throw ConfigError("weights must be finite and nonnegative");
  const double mean = values.mean();
  if (!(mean > 0.0)) throw ConfigError("weights must not all be zero");
  BalancingWeights w;
  w.values = values / mean;
  w.source_model = std::move(source);
  w.normalizer = mean;
  w.log_normalizer = std::log(mean);
  return w;
}

BalancingWeights BalancingWeights::uniform(std::size_t n) {
  return from_values(Vector::Ones(static_cast<Eigen::Index>(n)), "uniform");
}

void BalancingWeights::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "weight\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) out << format_double(values(i)) << '\n';
}

BalancingWeights BalancingWeights::load_csv(const std::filesystem::path& path) {
  const auto data = nbw::load_csv(path);
  if (data.n_cols() != 1 || data.column_names().front() != "weight") {
    throw ParseError("weights file must have a single column named 'weight'");
  }
  return from_values(data.values().col(0), path.string());
}

BalancingWeights compute_weights(const RatioNet& net, const Dataset& data, const VariableLayout& layout,
                                 std::string source_model) {
  layout.validate(data.n_cols());
  const Vector t = net.forward(critic_inputs(data, layout));
  if (!t.allFinite()) throw DivergenceError("critic output is not finite", std::numeric_limits<double>::quiet_NaN());
  const Vector neg = -t;
  // log mean exp(-T), shifted by the maximum.
  const double shift = neg.maxCoeff();
  const double log_mean =
      shift + std::log((neg.array() - shift).exp().sum()) - std::log(static_cast<double>(neg.size()));
  BalancingWeights w;
  w.values = (neg.array() - log_mean).exp().matrix();
  // One more pass pins the mean to 1 up to a few ulps.
  w.values /= w.values.mean();
  w.source_model = std::move(source_model);
  w.log_normalizer = log_mean;
  w.normalizer = std::exp(log_mean);
  return w;
}

double effective_sample_size(const BalancingWeights& w) {
  const double s = w.values.sum();
  const double s2 = w.values.squaredNorm();
  if (!(s2 > 0.0)) throw ConfigError("effective sample size of all-zero weights");
  return s * s / s2;
}

nlohmann::json BalanceReport::to_json() const {
  auto trace_json = [](const TrainTrace& t) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : t.records) {
      records.push_back({{"step", r.step},
                         {"train_loss", r.train_loss},
                         {"test_loss", r.test_loss},
                         {"test_estimate", r.test_estimate}});
    }
    return nlohmann::json{
        {"selected_step", t.selected_step}, {"stop_reason", to_string(t.stop_reason)}, {"records", records}};
  };
  return {{"i_alpha_weighted", i_alpha_weighted},
          {"i_alpha_uniform", i_alpha_uniform},
          {"ess", ess},
          {"max_weight", max_weight},
          {"weighted_trace", trace_json(weighted_trace)},
          {"uniform_trace", trace_json(uniform_trace)}};
}

BalanceReport check_balance(const Dataset& train_data, const Dataset& test_data, const VariableLayout& layout,
                            const BalancingWeights& train_weights, const BalancingWeights& test_weights,
                            const TrainConfig& cfg) {
  if (train_weights.size() != train_data.n_rows()) {
    throw ConfigError("weights have " + std::to_string(train_weights.size()) + " rows but training data has " +
                      std::to_string(train_data.n_rows()));
  }
  if (test_weights.size() != test_data.n_rows()) {
    throw ConfigError("test weights have " + std::to_string(test_weights.size()) + " rows but test data has " +
                      std::to_string(test_data.n_rows()));
  }
  TrainConfig checker = cfg;
  checker.seed = derive_seed(cfg.seed, kCheckerTag);

  const auto unit_train = BalancingWeights::uniform(train_data.n_rows());
  const auto unit_test = BalancingWeights::uniform(test_data.n_rows());

  BalanceReport report;
  auto weighted = train(train_data, test_data, layout, checker, {train_weights.span(), test_weights.span()});
  auto uniform = train(train_data, test_data, layout, checker, {unit_train.span(), unit_test.span()});
  report.i_alpha_weighted = weighted.trace.max_test_estimate();
  report.i_alpha_uniform = uniform.trace.max_test_estimate();
  report.weighted_trace = std::move(weighted.trace);
  report.uniform_trace = std::move(uniform.trace);
  report.ess = effective_sample_size(train_weights);
  report.max_weight = train_weights.values.maxCoeff();
  return report;
}

BalanceReport check_balance(const Dataset& train_data, const Dataset& test_data, const VariableLayout& layout,
                            const RatioNet& model, const TrainConfig& cfg) {
  return check_balance(train_data, test_data, layout, compute_weights(model, train_data, layout, "model"),
                       compute_weights(model, test_data, layout, "model"), cfg);
}

}  // namespace nbw
