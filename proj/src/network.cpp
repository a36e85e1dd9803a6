#include "varinfer/network.hpp"

#include <algorithm>
#include <cmath>

#include "varinfer/errors.hpp"

namespace varinfer {

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kRelu:
      return v > 0.0 ? v : 0.0;
    case Activation::kSigmoid:
      return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    case Activation::kTanh:
      return std::tanh(v);
    case Activation::kIdentity:
      break;
  }
  return v;
}

// Derivative expressed through the activation's output.
double activation_slope(Activation a, double out) {
  switch (a) {
    case Activation::kRelu:
      return out > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid:
      return out * (1.0 - out);
    case Activation::kTanh:
      return 1.0 - out * out;
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

std::size_t resolve_depth(const Network& net, std::size_t num_layers) {
  if (num_layers == std::string::npos) return net.depth();
  if (num_layers > net.depth()) throw ArgumentError("layer count exceeds network depth");
  return num_layers;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      break;
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ArgumentError("Network: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weights.rows() == 0 || l.weights.cols() == 0) throw ArgumentError("Network: empty layer");
    if (l.bias.size() != l.output_dim()) throw ArgumentError("Network: bias length mismatch");
    if (i > 0 && layers_[i - 1].output_dim() != l.input_dim()) {
      throw ArgumentError("Network: layer dimensions do not chain");
    }
    if (!all_finite(l.weights) || !std::ranges::all_of(l.bias, [](double b) { return std::isfinite(b); })) {
      throw ArgumentError("Network: non-finite parameters");
    }
  }
}

Network Network::create(Rng& rng, std::span<const std::size_t> dims, std::span<const Activation> activations) {
  if (dims.size() != activations.size() + 1 || activations.empty()) {
    throw ArgumentError("Network::create: need one more dimension than activations");
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0), activations[i]};
    for (double& w : layer.weights.data()) w = limit * (2.0 * rng.uniform() - 1.0);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool Network::operator==(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = other.layers_[i];
    if (a.activation != b.activation || !(a.weights == b.weights) || a.bias != b.bias) return false;
  }
  return true;
}

Grads Grads::zeros_like(const Network& net) {
  Grads g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Matrix(l.weights.rows(), l.weights.cols()), std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

void Grads::add_scaled(const Grads& other, double s) {
  if (other.layers.size() != layers.size()) throw ArgumentError("Grads::add_scaled: shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = layers[i].weights.data();
    const auto& ow = other.layers[i].weights.data();
    if (w.size() != ow.size()) throw ArgumentError("Grads::add_scaled: shape mismatch");
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += s * ow[j];
    for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += s * other.layers[i].bias[j];
  }
  if (input.same_shape(other.input)) {
    for (std::size_t j = 0; j < input.size(); ++j) input.data()[j] += s * other.input.data()[j];
  }
}

void Grads::scale(double factor) {
  for (auto& l : layers) {
    for (double& w : l.weights.data()) w *= factor;
    for (double& b : l.bias) b *= factor;
  }
  for (double& v : input.data()) v *= factor;
}

bool Grads::all_finite() const {
  for (const auto& l : layers) {
    if (!varinfer::all_finite(l.weights)) return false;
    if (!std::ranges::all_of(l.bias, [](double b) { return std::isfinite(b); })) return false;
  }
  return true;
}

double Grads::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    for (double w : l.weights.data()) m = std::max(m, std::abs(w));
    for (double b : l.bias) m = std::max(m, std::abs(b));
  }
  return m;
}

ForwardCache forward(const Network& net, const Matrix& batch, std::size_t num_layers) {
  const std::size_t depth = resolve_depth(net, num_layers);
  if (batch.cols() != net.input_dim()) throw ArgumentError("forward: batch width != network input dim");
  ForwardCache cache;
  cache.outputs.reserve(depth + 1);
  cache.outputs.push_back(batch);
  for (std::size_t i = 0; i < depth; ++i) {
    const Layer& layer = net.layers()[i];
    Matrix out = matmul(cache.outputs.back(), layer.weights);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] = activate(layer.activation, row[c] + layer.bias[c]);
    }
    cache.outputs.push_back(std::move(out));
  }
  return cache;
}

Grads backward(const Network& net, const ForwardCache& cache, const Matrix& upstream, std::size_t num_layers) {
  const std::size_t depth = resolve_depth(net, num_layers);
  if (cache.outputs.size() < depth + 1) throw ArgumentError("backward: cache shorter than requested depth");
  if (!upstream.same_shape(cache.outputs[depth])) throw ArgumentError("backward: upstream shape mismatch");

  Grads grads = Grads::zeros_like(net);
  Matrix delta = upstream;
  for (std::size_t i = depth; i-- > 0;) {
    const Layer& layer = net.layers()[i];
    const Matrix& out = cache.outputs[i + 1];
    for (std::size_t j = 0; j < delta.size(); ++j) {
      delta.data()[j] *= activation_slope(layer.activation, out.data()[j]);
    }
    grads.layers[i].weights = matmul_tn(cache.outputs[i], delta);
    auto& db = grads.layers[i].bias;
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      for (std::size_t c = 0; c < delta.cols(); ++c) db[c] += delta(r, c);
    }
    delta = matmul_nt(delta, layer.weights);
  }
  grads.input = std::move(delta);
  return grads;
}

AdamState AdamState::for_network(const Network& net, const AdamConfig& config) {
  return {config, Grads::zeros_like(net), Grads::zeros_like(net), 0};
}

void adam_step(Network& net, const Grads& grads, AdamState& state) {
  if (grads.layers.size() != net.depth() || state.first_moment.layers.size() != net.depth()) {
    throw ArgumentError("adam_step: gradient/state shapes do not match network");
  }
  const AdamConfig& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    if (param.size() != g.size() || m.size() != g.size()) throw ArgumentError("adam_step: shape mismatch");
    for (std::size_t j = 0; j < param.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      param[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  };
  for (std::size_t i = 0; i < net.depth(); ++i) {
    Layer& layer = net.layers()[i];
    update(layer.weights.data(), grads.layers[i].weights.data(), state.first_moment.layers[i].weights.data(),
           state.second_moment.layers[i].weights.data());
    update(layer.bias, grads.layers[i].bias, state.first_moment.layers[i].bias, state.second_moment.layers[i].bias);
  }
}

void sgd_step(Network& net, const Grads& grads, double lr) {
  if (grads.layers.size() != net.depth()) throw ArgumentError("sgd_step: shape mismatch");
  for (std::size_t i = 0; i < net.depth(); ++i) {
    Layer& layer = net.layers()[i];
    auto& w = layer.weights.data();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * grads.layers[i].weights.data()[j];
    for (std::size_t j = 0; j < layer.bias.size(); ++j) layer.bias[j] -= lr * grads.layers[i].bias[j];
  }
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

double finite_diff_max_error(std::span<Network* const> nets, std::span<const Grads* const> analytic,
                             const std::function<double()>& loss, double h) {
  if (nets.size() != analytic.size()) throw ArgumentError("finite_diff_max_error: nets/grads count mismatch");
  if (!(h > 0.0)) throw ArgumentError("finite_diff_max_error: h must be positive");
  double worst = 0.0;
  auto probe = [&](double& param, double expected) {
    const double saved = param;
    param = saved + h;
    const double up = loss();
    param = saved - h;
    const double down = loss();
    param = saved;
    worst = std::max(worst, relative_error((up - down) / (2.0 * h), expected));
  };
  for (std::size_t n = 0; n < nets.size(); ++n) {
    Network& net = *nets[n];
    const Grads& g = *analytic[n];
    if (g.layers.size() != net.depth()) throw ArgumentError("finite_diff_max_error: grads not congruent");
    for (std::size_t i = 0; i < net.depth(); ++i) {
      Layer& layer = net.layers()[i];
      for (std::size_t j = 0; j < layer.weights.size(); ++j) {
        probe(layer.weights.data()[j], g.layers[i].weights.data()[j]);
      }
      for (std::size_t j = 0; j < layer.bias.size(); ++j) probe(layer.bias[j], g.layers[i].bias[j]);
    }
  }
  return worst;
}

double finite_diff_check(const Network& net, const OutputLoss& loss_fn, const Matrix& batch, double h) {
  Network work = net;
  const ForwardCache cache = forward(work, batch);
  Matrix upstream(cache.output().rows(), cache.output().cols());
  loss_fn(cache.output(), upstream);
  const Grads analytic = backward(work, cache, upstream);

  Matrix scratch;
  auto loss = [&]() {
    const ForwardCache c = forward(work, batch);
    scratch = Matrix(c.output().rows(), c.output().cols());
    return loss_fn(c.output(), scratch);
  };
  Network* nets[] = {&work};
  const Grads* grads[] = {&analytic};
  return finite_diff_max_error(nets, grads, loss, h);
}

}  // namespace varinfer
