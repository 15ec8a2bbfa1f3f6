#include "nbw/net.hpp"

#include "nbw/errors.hpp"
#include "nbw/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace nbw {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "' (expected relu or tanh)");
}

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw ConfigError("network needs at least input and output dims");
  if (dims.back() != 1) throw ConfigError("network output dim must be 1");
  for (auto d : dims) {
    if (d == 0) throw ConfigError("network dims must be positive");
  }
}

void apply_activation(Matrix& h, Activation a) {
  if (a == Activation::relu) {
    h = h.cwiseMax(0.0);
  } else {
    h = h.array().tanh().matrix();
  }
}

// Activations seen by each layer: inputs[0] is the batch, inputs[l] the output of hidden layer l-1.
struct ForwardCache {
  std::vector<Matrix> inputs;
  Vector output;
};

ForwardCache forward_cached(const RatioNet& net, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != net.input_dim()) {
    throw ConfigError("batch width " + std::to_string(batch.cols()) + " does not match network input " +
                      std::to_string(net.input_dim()));
  }
  ForwardCache cache;
  const auto& layers = net.layers();
  cache.inputs.reserve(layers.size());
  cache.inputs.push_back(batch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix h;
    h.noalias() = cache.inputs.back() * layers[l].weight.transpose();
    h.rowwise() += layers[l].bias.transpose();
    if (l + 1 < layers.size()) {
      apply_activation(h, net.activation());
      cache.inputs.push_back(std::move(h));
    } else {
      cache.output = h.col(0);
    }
  }
  return cache;
}

GradientVector backprop_cached(const RatioNet& net, const ForwardCache& cache, const Vector& cotangent) {
  const auto& layers = net.layers();
  GradientVector grad(static_cast<Eigen::Index>(net.parameter_count()));
  std::vector<Eigen::Index> offsets(layers.size());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = offset;
    offset += layers[l].weight.size() + layers[l].bias.size();
  }

  Matrix g = cotangent;  // M x 1, cotangent of the current layer's pre-activation
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& input = cache.inputs[l];
    const auto out = layer.weight.rows();
    const auto in = layer.weight.cols();
    Matrix dw;
    dw.noalias() = g.transpose() * input;  // out x in
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(grad.data() + offsets[l], out,
                                                                                        in) = dw;
    grad.segment(offsets[l] + out * in, out) = g.colwise().sum().transpose();
    if (l == 0) break;
    Matrix prev;
    prev.noalias() = g * layer.weight;  // M x in
    if (net.activation() == Activation::relu) {
      prev = prev.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    } else {
      prev = prev.cwiseProduct((1.0 - input.array().square()).matrix());
    }
    g = std::move(prev);
  }
  return grad;
}

}  // namespace

RatioNet::RatioNet(std::vector<std::size_t> dims, Activation activation, std::vector<DenseLayer> layers)
    : dims_(std::move(dims)), activation_(activation), layers_(std::move(layers)) {
  check_dims(dims_);
  if (layers_.size() + 1 != dims_.size()) throw ConfigError("layer count does not match dims");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (static_cast<std::size_t>(layer.weight.rows()) != dims_[l + 1] ||
        static_cast<std::size_t>(layer.weight.cols()) != dims_[l] ||
        static_cast<std::size_t>(layer.bias.size()) != dims_[l + 1]) {
      throw ConfigError("layer " + std::to_string(l) + " shape does not chain with dims");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) throw ConfigError("network parameters must be finite");
  }
}

RatioNet RatioNet::init(std::vector<std::size_t> dims, Activation activation, std::uint64_t seed) {
  check_dims(dims);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    RandomStream rng(seed, l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    DenseLayer layer{Matrix(dims[l + 1], dims[l]), Vector::Zero(static_cast<Eigen::Index>(dims[l + 1]))};
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    }
    layers.push_back(std::move(layer));
  }
  return RatioNet(std::move(dims), activation, std::move(layers));
}

std::size_t RatioNet::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) count += dims_[l] * dims_[l + 1] + dims_[l + 1];
  return count;
}

Vector RatioNet::forward(const Matrix& batch) const { return forward_cached(*this, batch).output; }

Vector RatioNet::flat_parameters() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    const auto out = layer.weight.rows();
    const auto in = layer.weight.cols();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data() + offset, out, in) =
        layer.weight;
    offset += out * in;
    flat.segment(offset, out) = layer.bias;
    offset += out;
  }
  return flat;
}

void RatioNet::set_flat_parameters(const Vector& params) {
  if (static_cast<std::size_t>(params.size()) != parameter_count()) throw ConfigError("parameter vector length mismatch");
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    const auto out = layer.weight.rows();
    const auto in = layer.weight.cols();
    layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        params.data() + offset, out, in);
    offset += out * in;
    layer.bias = params.segment(offset, out);
    offset += out;
  }
}

nlohmann::json RatioNet::to_json() const {
  nlohmann::json j;
  j["dims"] = dims_;
  j["activation"] = to_string(activation_);
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index k = 0; k < layer.weight.cols(); ++k) w.push_back(layer.weight(i, k));
    }
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    j["layers"].push_back({{"w", std::move(w)}, {"b", std::move(b)}});
  }
  return j;
}

RatioNet RatioNet::from_json(const nlohmann::json& j) {
  try {
    auto dims = j.at("dims").get<std::vector<std::size_t>>();
    const auto activation = activation_from_string(j.at("activation").get<std::string>());
    check_dims(dims);
    const auto& jl = j.at("layers");
    if (jl.size() + 1 != dims.size()) throw ParseError("model JSON: layer count does not match dims");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < jl.size(); ++l) {
      const auto w = jl[l].at("w").get<std::vector<double>>();
      const auto b = jl[l].at("b").get<std::vector<double>>();
      const auto out = dims[l + 1];
      const auto in = dims[l];
      if (w.size() != out * in || b.size() != out) {
        throw ParseError("model JSON: layer " + std::to_string(l) + " has the wrong number of parameters");
      }
      DenseLayer layer{Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                           w.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                       Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(out))};
      layers.push_back(std::move(layer));
    }
    return RatioNet(std::move(dims), activation, std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

void RatioNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

RatioNet RatioNet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

GradientVector backprop(const RatioNet& net, const Matrix& batch, const Vector& output_cotangent) {
  if (output_cotangent.size() != batch.rows()) throw ConfigError("cotangent length must match batch rows");
  return backprop_cached(net, forward_cached(net, batch), output_cotangent);
}

AlphaGradient backward_alpha(const RatioNet& net, const Matrix& batch_p, const Matrix& batch_q, AlphaParam alpha,
                             std::span<const double> p_weights) {
  if (batch_p.rows() == 0 || batch_q.rows() == 0) throw ConfigError("backward_alpha needs nonempty batches");
  if (batch_p.cols() != batch_q.cols()) throw ConfigError("P and Q batches differ in width");
  if (!p_weights.empty() && static_cast<Eigen::Index>(p_weights.size()) != batch_p.rows()) {
    throw ConfigError("P weights do not match P batch");
  }
  const auto mp = batch_p.rows();
  const auto mq = batch_q.rows();
  Matrix stacked(mp + mq, batch_p.cols());
  stacked.topRows(mp) = batch_p;
  stacked.bottomRows(mq) = batch_q;

  const auto cache = forward_cached(net, stacked);
  const double a = alpha.value();
  Vector cotangent(mp + mq);
  double sum_p = 0.0;
  double sum_q = 0.0;
  for (Eigen::Index i = 0; i < mp; ++i) {
    const double w = p_weights.empty() ? 1.0 : p_weights[static_cast<std::size_t>(i)];
    const double e = w * guarded_exp((a - 1.0) * cache.output(i));
    sum_p += e;
    cotangent(i) = -e / static_cast<double>(mp);
  }
  for (Eigen::Index i = 0; i < mq; ++i) {
    const double e = guarded_exp(a * cache.output(mp + i));
    sum_q += e;
    cotangent(mp + i) = e / static_cast<double>(mq);
  }
  AlphaGradient result;
  result.terms =
      AlphaLossTerms::from_means(sum_q / static_cast<double>(mq), sum_p / static_cast<double>(mp), alpha);
  result.gradient = backprop_cached(net, cache, cotangent);
  return result;
}

GradientVector finite_diff_grad(const RatioNet& net, const Matrix& batch_p, const Matrix& batch_q, AlphaParam alpha,
                                double step, std::span<const double> p_weights) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  RatioNet probe = net;
  Vector params = net.flat_parameters();
  GradientVector grad(params.size());
  auto loss_at = [&](const Vector& p) {
    probe.set_flat_parameters(p);
    const Vector tp = probe.forward(batch_p);
    const Vector tq = probe.forward(batch_q);
    return alpha_loss({tp.data(), static_cast<std::size_t>(tp.size())},
                      {tq.data(), static_cast<std::size_t>(tq.size())}, alpha, p_weights)
        .loss;
  };
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    const double saved = params(k);
    params(k) = saved + step;
    const double up = loss_at(params);
    params(k) = saved - step;
    const double down = loss_at(params);
    params(k) = saved;
    grad(k) = (up - down) / (2.0 * step);
  }
  return grad;
}

AdamState AdamState::for_net(const RatioNet& net, double learning_rate) {
  AdamState s;
  const auto n = static_cast<Eigen::Index>(net.parameter_count());
  s.first_moment = Vector::Zero(n);
  s.second_moment = Vector::Zero(n);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(AdamState& state, RatioNet& net, const GradientVector& grad) {
  const auto n = static_cast<Eigen::Index>(net.parameter_count());
  if (grad.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw ConfigError("Adam state, gradient, and network sizes differ");
  }
  if (!grad.allFinite()) throw DivergenceError("non-finite gradient", std::numeric_limits<double>::quiet_NaN());
  ++state.step;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  Vector params = net.flat_parameters();
  params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
  if (!params.allFinite()) throw DivergenceError("parameters became non-finite", std::numeric_limits<double>::quiet_NaN());
  net.set_flat_parameters(params);
}

}  // namespace nbw
