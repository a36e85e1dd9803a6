#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varinfer/matrix.hpp"
#include "varinfer/rng.hpp"

namespace varinfer {

enum class Activation { kRelu, kSigmoid, kIdentity, kTanh };

std::string_view activation_name(Activation a);
/// Throws ArgumentError for an unknown name.
Activation parse_activation(std::string_view name);

/// y = act(x W + b) with W stored as (in x out).
struct Layer {
  Matrix weights;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t input_dim() const { return weights.rows(); }
  std::size_t output_dim() const { return weights.cols(); }
};

/// Feed-forward stack of dense layers.
class Network {
 public:
  Network() = default;
  /// Validates that layer shapes chain and parameters are finite.
  explicit Network(std::vector<Layer> layers);

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  /// dims has one more entry than activations.
  static Network create(Rng& rng, std::span<const std::size_t> dims, std::span<const Activation> activations);

  std::size_t depth() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.back().output_dim(); }
  std::size_t parameter_count() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  bool operator==(const Network& other) const;

 private:
  std::vector<Layer> layers_;
};

/// Every intermediate of a forward pass: outputs[0] is the input batch and
/// outputs[i + 1] the post-activation output of layer i.
struct ForwardCache {
  std::vector<Matrix> outputs;

  const Matrix& output() const { return outputs.back(); }
};

struct LayerGrads {
  Matrix weights;
  std::vector<double> bias;
};

/// Gradients congruent with a Network's parameters, plus the input gradient.
struct Grads {
  std::vector<LayerGrads> layers;
  Matrix input;

  static Grads zeros_like(const Network& net);

  /// this += scale * other (parameters and input).
  void add_scaled(const Grads& other, double scale);
  void scale(double factor);
  bool all_finite() const;
  /// Largest absolute parameter entry.
  double max_abs() const;
};

/// Runs layers [0, num_layers) (all layers when num_layers is npos).
ForwardCache forward(const Network& net, const Matrix& batch, std::size_t num_layers = std::string::npos);

/// Reverse-mode gradients given dL/d(outputs[num_layers]). Layers at or past
/// num_layers get zero gradients. Defaults to the full network.
Grads backward(const Network& net, const ForwardCache& cache, const Matrix& upstream,
               std::size_t num_layers = std::string::npos);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Grads first_moment;
  Grads second_moment;
  std::size_t t = 0;

  static AdamState for_network(const Network& net, const AdamConfig& config = {});
};

/// One bias-corrected Adam descent step; increments state.t.
void adam_step(Network& net, const Grads& grads, AdamState& state);

void sgd_step(Network& net, const Grads& grads, double lr);

/// Loss on a network output; writes dL/d(output) into grad_output.
using OutputLoss = std::function<double(const Matrix& output, Matrix& grad_output)>;

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Central differences of `loss` over every parameter of every network in
/// `nets`, compared with `analytic`. Parameters are restored afterwards.
double finite_diff_max_error(std::span<Network* const> nets, std::span<const Grads* const> analytic,
                             const std::function<double()>& loss, double h);

/// Backprop vs central differences for a single network under loss_fn.
double finite_diff_check(const Network& net, const OutputLoss& loss_fn, const Matrix& batch, double h);

}  // namespace varinfer
