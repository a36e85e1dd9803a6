#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>

#include "varinfer/matrix.hpp"
#include "varinfer/network.hpp"
#include "varinfer/rng.hpp"
#include "varinfer/trace.hpp"

namespace varinfer {

/// Discriminator probabilities are clamped to [kDisClamp, 1 - kDisClamp] before logs.
inline constexpr double kDisClamp = 1e-7;

/// Encoder (x -> mu, logvar), decoder/generator (z -> x) and a discriminator
/// whose last layer is a sigmoid. feature_layer picks Dis_l, the output of
/// discriminator layer l, as the learned similarity space.
struct VaeGanModel {
  Network encoder;
  Network decoder;
  Network discriminator;
  std::size_t feature_layer = 1;
  std::size_t latent_dim = 0;

  void validate() const;

  bool operator==(const VaeGanModel&) const = default;
};

struct VaeGanArchitecture {
  std::size_t input_dim = 2;
  std::size_t hidden = 32;
  std::size_t latent = 2;
  std::size_t dis_hidden = 32;
  std::size_t feature_layer = 1;
};

/// Encoder and decoder: one tanh hidden layer. Discriminator: two tanh hidden
/// layers and a sigmoid unit, so feature_layer may be 1 or 2.
VaeGanModel make_vaegan(Rng& rng, const VaeGanArchitecture& arch);

/// Batch mean of log D(x) + log(1 - D(x~)) + log(1 - D(x_p)).
double gan_loss(std::span<const double> dis_real, std::span<const double> dis_fake,
                std::span<const double> dis_prior_fake);

/// Output of discriminator layer l, 1 <= l < depth.
Matrix dis_features(const VaeGanModel& model, const Matrix& x, std::size_t l);

/// Batch mean of 1/2 |f_real - f_recon|^2 + (d/2) log(2 pi).
double llike_disl(const Matrix& features_real, const Matrix& features_recon);

struct VaeGanLossParts {
  double l_prior = 0.0;
  double l_llike_disl = 0.0;
  double l_gan = 0.0;
  double gamma = 1.0;
  double dis_real = 0.0;   ///< mean D(x)
  double dis_recon = 0.0;  ///< mean D(x~)
  double dis_prior = 0.0;  ///< mean D(x_p)
};

/// Noise for one step. vaegan_step draws eps first, then z_prior, each B x J row-major.
struct VaeGanNoise {
  Matrix eps;
  Matrix z_prior;
};

VaeGanNoise draw_vaegan_noise(Rng& rng, std::size_t batch, std::size_t latent);

/// Descent directions of the three players, with L_GAN the value returned by
/// gan_loss (the discriminator maximizes it, the decoder minimizes it):
///   encoder        d(L_prior + L_llike)
///   decoder        d(gamma L_llike + L_GAN)
///   discriminator  d(-L_GAN)
/// L_llike never contributes to discriminator parameters. The per-term pieces
/// (decoder_gan is dL_GAN/d theta_Dec) are kept so the routing can be inspected.
struct VaeGanGradients {
  VaeGanLossParts parts;
  Grads encoder;
  Grads decoder;
  Grads discriminator;
  Grads encoder_prior;
  Grads encoder_llike;
  Grads decoder_llike;
  Grads decoder_gan;
};

VaeGanGradients vaegan_gradients(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise, double gamma);

/// Loss parts only.
VaeGanLossParts vaegan_losses(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise, double gamma);

struct VaeGanLearningRates {
  double encoder = 1e-3;
  double decoder = 1e-3;
  double discriminator = 1e-3;
};

struct VaeGanOptimizers {
  AdamState encoder;
  AdamState decoder;
  AdamState discriminator;

  static VaeGanOptimizers for_model(const VaeGanModel& model, const VaeGanLearningRates& lrs);
};

/// One pass of the three-player update: draw noise, evaluate every loss on the
/// current parameters, then take one Adam descent step per network on its own
/// objective. Returns the pre-update loss parts. Throws NumericalError naming
/// the first non-finite part.
VaeGanLossParts vaegan_step(Rng& rng, VaeGanModel& model, const Matrix& x, double gamma, VaeGanOptimizers& opt);

/// Worst relative error of the three routed gradients against central
/// differences of their objectives, noise fixed.
double vaegan_gradient_check(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise, double gamma,
                             double h = 1e-5);

struct VaeGanTrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  VaeGanLearningRates lrs;
};

struct VaeGanTrainResult {
  VaeGanModel model;
  RunTrace trace;
};

/// Streams: Rng(seed) split into model init, shuffling and step noise, as in train_vae.
VaeGanTrainResult train_vaegan(VaeGanModel init, const Matrix& data, const VaeGanTrainConfig& config);
VaeGanTrainResult train_vaegan(const Matrix& data, const VaeGanArchitecture& arch, const VaeGanTrainConfig& config);
VaeGanModel initial_vaegan(const VaeGanArchitecture& arch, std::uint64_t seed);

/// Decoder applied to prior samples.
Matrix generate(const VaeGanModel& model, Rng& rng, std::size_t n);
/// Decoder applied to reparameterized encodings.
Matrix reconstruct(const VaeGanModel& model, Rng& rng, const Matrix& x);

struct VaeGanCheckpoint {
  VaeGanModel model;
  double gamma = 1.0;
};

/// "varinfer-vaegan 1", gamma, feature_layer, latent_dim, then three networks.
void write_vaegan(std::ostream& out, const VaeGanCheckpoint& checkpoint);
VaeGanCheckpoint read_vaegan(std::istream& in);

}  // namespace varinfer
