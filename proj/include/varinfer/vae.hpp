#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "varinfer/matrix.hpp"
#include "varinfer/network.hpp"
#include "varinfer/rng.hpp"
#include "varinfer/trace.hpp"

namespace varinfer {

/// Observation model p(x | z) produced by the decoder.
enum class Likelihood {
  kBernoulli,        ///< decoder emits logits
  kGaussianUnitVar,  ///< decoder emits means, unit variance
};

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Encoder x -> (mu, log sigma^2) of width 2J; decoder z (width J) -> x.
struct VaeModel {
  Network encoder;
  Network decoder;
  std::size_t latent_dim = 0;
  Likelihood likelihood = Likelihood::kBernoulli;

  /// Throws ArgumentError when widths are inconsistent.
  void validate() const;
  std::size_t input_dim() const { return encoder.input_dim(); }

  bool operator==(const VaeModel&) const = default;
};

struct VaeArchitecture {
  std::size_t input_dim = 64;
  std::size_t hidden = 32;
  std::size_t latent = 2;
  Likelihood likelihood = Likelihood::kBernoulli;
};

/// One tanh hidden layer on each side, identity heads.
VaeModel make_vae(Rng& rng, const VaeArchitecture& arch);

struct Encoding {
  Matrix mu;
  Matrix logvar;  ///< clamped to [kLogVarMin, kLogVarMax]
};

Encoding encode(const VaeModel& model, const Matrix& x);

struct Reparameterized {
  Matrix z;
  Matrix eps;
};

/// z = mu + exp(logvar / 2) * eps with eps ~ N(0, I) drawn row-major.
Reparameterized reparameterize(Rng& rng, const Matrix& mu, const Matrix& logvar);
Matrix reparameterize_with_noise(const Matrix& mu, const Matrix& logvar, const Matrix& eps);

/// Per-row KL(N(mu, exp(logvar)) || N(0, I)) = -1/2 sum_j (1 + logvar - mu^2 - exp(logvar)).
std::vector<double> kl_to_standard_normal(const Matrix& mu, const Matrix& logvar);

/// Per-row log p(x | decoder output).
std::vector<double> log_likelihood(Likelihood kind, const Matrix& x, const Matrix& decoder_out);

/// Decoder output mapped to the data space (sigmoid for Bernoulli logits).
Matrix observation_means(Likelihood kind, const Matrix& decoder_out);

/// Batch means of the SGVB terms.
struct VaeLossParts {
  double recon = 0.0;       ///< (1/L) sum_l log p(x | z_l)
  double kl = 0.0;          ///< KL(q(z|x) || p(z))
  double total_elbo = 0.0;  ///< recon - beta |kl - C|, averaged per point
  double beta = 1.0;
  double capacity = 0.0;
};

struct SgvbConfig {
  std::size_t samples = 1;  ///< L
  double beta = 1.0;
  double capacity = 0.0;  ///< C
};

/// Loss parts and gradients of -total_elbo (the quantity training minimizes).
struct SgvbResult {
  VaeLossParts parts;
  Grads encoder;
  Grads decoder;
};

/// Draws L noise matrices (B x J each) from rng, then defers to the frozen-noise overload.
SgvbResult sgvb_loss_and_grads(Rng& rng, const VaeModel& model, const Matrix& x, const SgvbConfig& config);

/// Frozen noise: noise[l] is the eps matrix of sample l.
SgvbResult sgvb_loss_and_grads(const VaeModel& model, const Matrix& x, std::span<const Matrix> noise,
                               const SgvbConfig& config);

/// Max relative error between backprop and central differences of -total_elbo
/// over every encoder and decoder parameter, with the noise held fixed.
double vae_gradient_check(const VaeModel& model, const Matrix& x, std::span<const Matrix> noise,
                          const SgvbConfig& config, double h = 1e-5);

struct VaeTrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 20;
  std::size_t samples = 1;
  double beta = 1.0;
  double capacity = 0.0;
  std::uint64_t seed = 0;
  double lr = 1e-3;
};

struct VaeTrainResult {
  VaeModel model;
  RunTrace trace;
};

/// Adam on -total_elbo. Each epoch visits a seeded permutation of the rows.
/// The trace records per-epoch means of recon, kl, total_elbo and loss.
/// Throws NumericalError naming the epoch and batch on a non-finite loss.
///
/// Streams: Rng(seed) is split three times, into model init (used only by the
/// architecture overload), minibatch shuffling and reparameterization noise.
VaeTrainResult train_vae(VaeModel init, const Matrix& data, const VaeTrainConfig& config);
VaeTrainResult train_vae(const Matrix& data, const VaeArchitecture& arch, const VaeTrainConfig& config);

/// The model the architecture overload of train_vae starts from.
VaeModel initial_vae(const VaeArchitecture& arch, std::uint64_t seed);

/// Full-dataset loss parts under noise drawn from rng.
VaeLossParts evaluate_vae(const VaeModel& model, const Matrix& data, Rng& rng, const SgvbConfig& config);

/// decode(reparameterize(encode(x))) in data space.
Matrix reconstruct(const VaeModel& model, Rng& rng, const Matrix& x);

/// decode(z) with z ~ N(0, I), in data space.
Matrix generate(const VaeModel& model, Rng& rng, std::size_t n);

/// Network checkpoint preceded by "varinfer-vae 1", latent_dim and likelihood lines.
void write_vae(std::ostream& out, const VaeModel& model);
VaeModel read_vae(std::istream& in);

}  // namespace varinfer
