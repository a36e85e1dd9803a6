#include "varinfer/vaegan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "varinfer/checkpoint.hpp"
#include "varinfer/errors.hpp"
#include "varinfer/vae.hpp"

namespace varinfer {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double clamp_prob(double p) { return std::clamp(p, kDisClamp, 1.0 - kDisClamp); }

bool inside_clamp(double p) { return p > kDisClamp && p < 1.0 - kDisClamp; }

double column_mean(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data()) acc += v;
  return acc / static_cast<double>(m.size());
}

// Everything one step needs, evaluated on fixed parameters and noise.
struct StepGraph {
  ForwardCache enc;
  Matrix mu;
  Matrix logvar;
  ForwardCache dec;       // decoder on z
  ForwardCache dis_real;  // discriminator on x
  ForwardCache dis_recon; // discriminator on x~
  ForwardCache dec_prior; // decoder on z_prior
  ForwardCache dis_prior; // discriminator on x_p
  VaeGanLossParts parts;
};

StepGraph build_graph(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise, double gamma) {
  if (x.rows() == 0) throw ArgumentError("vaegan: empty batch");
  if (x.cols() != model.encoder.input_dim()) throw ArgumentError("vaegan: data width does not match encoder");
  const std::size_t latent = model.latent_dim;
  if (noise.eps.rows() != x.rows() || noise.eps.cols() != latent || !noise.z_prior.same_shape(noise.eps)) {
    throw ArgumentError("vaegan: noise shape mismatch");
  }

  StepGraph g;
  g.enc = forward(model.encoder, x);
  g.mu = slice_cols(g.enc.output(), 0, latent);
  g.logvar = slice_cols(g.enc.output(), latent, latent);
  for (double& v : g.logvar.data()) v = std::clamp(v, kLogVarMin, kLogVarMax);

  const Matrix z = reparameterize_with_noise(g.mu, g.logvar, noise.eps);
  g.dec = forward(model.decoder, z);
  g.dis_real = forward(model.discriminator, x);
  g.dis_recon = forward(model.discriminator, g.dec.output());
  g.dec_prior = forward(model.decoder, noise.z_prior);
  g.dis_prior = forward(model.discriminator, g.dec_prior.output());

  const std::vector<double> kl = kl_to_standard_normal(g.mu, g.logvar);
  VaeGanLossParts& p = g.parts;
  p.gamma = gamma;
  p.l_prior = std::accumulate(kl.begin(), kl.end(), 0.0) / static_cast<double>(kl.size());
  const std::size_t l = model.feature_layer;
  p.l_llike_disl = llike_disl(g.dis_real.outputs[l], g.dis_recon.outputs[l]);
  p.l_gan = gan_loss(g.dis_real.output().data(), g.dis_recon.output().data(), g.dis_prior.output().data());
  p.dis_real = column_mean(g.dis_real.output());
  p.dis_recon = column_mean(g.dis_recon.output());
  p.dis_prior = column_mean(g.dis_prior.output());
  return g;
}

// dL_GAN / dD for a real (sign +1) or generated (sign -1) batch, zero where clamped.
Matrix gan_upstream(const Matrix& probs, bool real) {
  const double inv_batch = 1.0 / static_cast<double>(probs.rows());
  Matrix up(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = probs.data()[i];
    if (!inside_clamp(d)) continue;
    up.data()[i] = real ? inv_batch / d : -inv_batch / (1.0 - d);
  }
  return up;
}

// Encoder gradient from upstream on (mu, clamped logvar).
Grads encoder_grads(const VaeGanModel& model, const StepGraph& g, Matrix d_mu, Matrix d_logvar) {
  const std::size_t latent = model.latent_dim;
  const Matrix& raw = g.enc.output();
  for (std::size_t r = 0; r < d_logvar.rows(); ++r) {
    for (std::size_t c = 0; c < latent; ++c) {
      const double v = raw(r, latent + c);
      if (v < kLogVarMin || v > kLogVarMax) d_logvar(r, c) = 0.0;
    }
  }
  return backward(model.encoder, g.enc, hconcat(d_mu, d_logvar));
}

void check_parts(const VaeGanLossParts& p) {
  if (!std::isfinite(p.l_prior)) throw NumericalError("vaegan_step: L_prior is non-finite");
  if (!std::isfinite(p.l_llike_disl)) throw NumericalError("vaegan_step: L_llike^Dis_l is non-finite");
  if (!std::isfinite(p.l_gan)) throw NumericalError("vaegan_step: L_GAN is non-finite");
}

Matrix draw_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

void VaeGanModel::validate() const {
  if (latent_dim == 0) throw ArgumentError("VaeGanModel: latent_dim must be positive");
  if (encoder.depth() == 0 || decoder.depth() == 0 || discriminator.depth() == 0) {
    throw ArgumentError("VaeGanModel: missing network");
  }
  if (encoder.output_dim() != 2 * latent_dim) throw ArgumentError("VaeGanModel: encoder output must be 2J wide");
  if (decoder.input_dim() != latent_dim) throw ArgumentError("VaeGanModel: decoder input must be J wide");
  if (decoder.output_dim() != discriminator.input_dim() || decoder.output_dim() != encoder.input_dim()) {
    throw ArgumentError("VaeGanModel: decoder output must match data and discriminator width");
  }
  if (discriminator.output_dim() != 1 || discriminator.layers().back().activation != Activation::kSigmoid) {
    throw ArgumentError("VaeGanModel: discriminator must end in one sigmoid unit");
  }
  if (feature_layer < 1 || feature_layer >= discriminator.depth()) {
    throw ArgumentError("VaeGanModel: feature layer must satisfy 1 <= l < discriminator depth");
  }
}

VaeGanModel make_vaegan(Rng& rng, const VaeGanArchitecture& arch) {
  const std::size_t enc_dims[] = {arch.input_dim, arch.hidden, 2 * arch.latent};
  const std::size_t dec_dims[] = {arch.latent, arch.hidden, arch.input_dim};
  const Activation vae_acts[] = {Activation::kTanh, Activation::kIdentity};
  const std::size_t dis_dims[] = {arch.input_dim, arch.dis_hidden, arch.dis_hidden, 1};
  const Activation dis_acts[] = {Activation::kTanh, Activation::kTanh, Activation::kSigmoid};
  VaeGanModel model;
  model.encoder = Network::create(rng, enc_dims, vae_acts);
  model.decoder = Network::create(rng, dec_dims, vae_acts);
  model.discriminator = Network::create(rng, dis_dims, dis_acts);
  model.feature_layer = arch.feature_layer;
  model.latent_dim = arch.latent;
  model.validate();
  return model;
}

double gan_loss(std::span<const double> dis_real, std::span<const double> dis_fake,
                std::span<const double> dis_prior_fake) {
  if (dis_real.empty() || dis_real.size() != dis_fake.size() || dis_real.size() != dis_prior_fake.size()) {
    throw ArgumentError("gan_loss: batches must be non-empty and of equal size");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < dis_real.size(); ++i) {
    acc += std::log(clamp_prob(dis_real[i])) + std::log(1.0 - clamp_prob(dis_fake[i])) +
           std::log(1.0 - clamp_prob(dis_prior_fake[i]));
  }
  return acc / static_cast<double>(dis_real.size());
}

Matrix dis_features(const VaeGanModel& model, const Matrix& x, std::size_t l) {
  if (l < 1 || l >= model.discriminator.depth()) {
    throw ArgumentError("dis_features: layer must satisfy 1 <= l < discriminator depth");
  }
  return forward(model.discriminator, x, l).output();
}

double llike_disl(const Matrix& features_real, const Matrix& features_recon) {
  if (!features_real.same_shape(features_recon) || features_real.rows() == 0) {
    throw ArgumentError("llike_disl: feature shapes differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < features_real.size(); ++i) {
    const double d = features_real.data()[i] - features_recon.data()[i];
    acc += 0.5 * d * d;
  }
  const double rows = static_cast<double>(features_real.rows());
  return acc / rows + 0.5 * static_cast<double>(features_real.cols()) * kLog2Pi;
}

VaeGanNoise draw_vaegan_noise(Rng& rng, std::size_t batch, std::size_t latent) {
  VaeGanNoise noise;
  noise.eps = draw_matrix(rng, batch, latent);
  noise.z_prior = draw_matrix(rng, batch, latent);
  return noise;
}

VaeGanLossParts vaegan_losses(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise, double gamma) {
  return build_graph(model, x, noise, gamma).parts;
}

VaeGanGradients vaegan_gradients(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise,
                                 double gamma) {
  model.validate();
  const StepGraph g = build_graph(model, x, noise, gamma);
  const std::size_t batch = x.rows();
  const std::size_t latent = model.latent_dim;
  const std::size_t l = model.feature_layer;
  const double inv_batch = 1.0 / static_cast<double>(batch);

  VaeGanGradients out;
  out.parts = g.parts;

  // L_llike: d/d f_recon = (f_recon - f_real) / B, pulled back through Dis
  // layers [0, l) to x~. The discriminator's own parameter gradients are dropped.
  Matrix d_features = g.dis_recon.outputs[l];
  for (std::size_t i = 0; i < d_features.size(); ++i) {
    d_features.data()[i] = (d_features.data()[i] - g.dis_real.outputs[l].data()[i]) * inv_batch;
  }
  const Matrix d_recon_llike = backward(model.discriminator, g.dis_recon, d_features, l).input;
  out.decoder_llike = backward(model.decoder, g.dec, d_recon_llike);

  // Through z = mu + exp(logvar / 2) eps into the encoder.
  const Matrix& dz = out.decoder_llike.input;
  Matrix d_mu_llike(batch, latent);
  Matrix d_logvar_llike(batch, latent);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    d_mu_llike.data()[i] = dz.data()[i];
    d_logvar_llike.data()[i] = dz.data()[i] * 0.5 * std::exp(0.5 * g.logvar.data()[i]) * noise.eps.data()[i];
  }
  out.encoder_llike = encoder_grads(model, g, d_mu_llike, d_logvar_llike);

  Matrix d_mu_prior(batch, latent);
  Matrix d_logvar_prior(batch, latent);
  for (std::size_t i = 0; i < d_mu_prior.size(); ++i) {
    d_mu_prior.data()[i] = g.mu.data()[i] * inv_batch;
    d_logvar_prior.data()[i] = 0.5 * (std::exp(g.logvar.data()[i]) - 1.0) * inv_batch;
  }
  out.encoder_prior = encoder_grads(model, g, d_mu_prior, d_logvar_prior);

  // L_GAN through all three discriminator passes.
  const Grads dis_real = backward(model.discriminator, g.dis_real, gan_upstream(g.dis_real.output(), true));
  const Grads dis_recon = backward(model.discriminator, g.dis_recon, gan_upstream(g.dis_recon.output(), false));
  const Grads dis_prior = backward(model.discriminator, g.dis_prior, gan_upstream(g.dis_prior.output(), false));
  // The discriminator ascends L_GAN, so its descent direction is -dL_GAN.
  out.discriminator = Grads::zeros_like(model.discriminator);
  out.discriminator.add_scaled(dis_real, -1.0);
  out.discriminator.add_scaled(dis_recon, -1.0);
  out.discriminator.add_scaled(dis_prior, -1.0);
  out.discriminator.input = Matrix();

  out.decoder_gan = backward(model.decoder, g.dec, dis_recon.input);
  out.decoder_gan.add_scaled(backward(model.decoder, g.dec_prior, dis_prior.input), 1.0);
  out.decoder_gan.input = Matrix();

  out.encoder = out.encoder_prior;
  out.encoder.add_scaled(out.encoder_llike, 1.0);

  out.decoder = Grads::zeros_like(model.decoder);
  out.decoder.add_scaled(out.decoder_llike, gamma);
  out.decoder.add_scaled(out.decoder_gan, 1.0);
  return out;
}

VaeGanOptimizers VaeGanOptimizers::for_model(const VaeGanModel& model, const VaeGanLearningRates& lrs) {
  AdamConfig enc;
  enc.lr = lrs.encoder;
  AdamConfig dec;
  dec.lr = lrs.decoder;
  AdamConfig dis;
  dis.lr = lrs.discriminator;
  return {AdamState::for_network(model.encoder, enc), AdamState::for_network(model.decoder, dec),
          AdamState::for_network(model.discriminator, dis)};
}

VaeGanLossParts vaegan_step(Rng& rng, VaeGanModel& model, const Matrix& x, double gamma, VaeGanOptimizers& opt) {
  if (!(gamma >= 0.0)) throw ArgumentError("vaegan_step: gamma must be non-negative");
  const VaeGanNoise noise = draw_vaegan_noise(rng, x.rows(), model.latent_dim);
  const VaeGanGradients g = vaegan_gradients(model, x, noise, gamma);
  check_parts(g.parts);
  if (!g.encoder.all_finite() || !g.decoder.all_finite() || !g.discriminator.all_finite()) {
    throw NumericalError("vaegan_step: non-finite gradient");
  }
  adam_step(model.encoder, g.encoder, opt.encoder);
  adam_step(model.decoder, g.decoder, opt.decoder);
  adam_step(model.discriminator, g.discriminator, opt.discriminator);
  return g.parts;
}

double vaegan_gradient_check(const VaeGanModel& model, const Matrix& x, const VaeGanNoise& noise, double gamma,
                             double h) {
  VaeGanModel work = model;
  const VaeGanGradients analytic = vaegan_gradients(work, x, noise, gamma);
  auto parts = [&]() { return vaegan_losses(work, x, noise, gamma); };

  Network* enc[] = {&work.encoder};
  const Grads* enc_g[] = {&analytic.encoder};
  const double enc_err = finite_diff_max_error(enc, enc_g, [&] {
    const VaeGanLossParts p = parts();
    return p.l_prior + p.l_llike_disl;
  }, h);

  Network* dec[] = {&work.decoder};
  const Grads* dec_g[] = {&analytic.decoder};
  const double dec_err = finite_diff_max_error(dec, dec_g, [&] {
    const VaeGanLossParts p = parts();
    return gamma * p.l_llike_disl + p.l_gan;
  }, h);

  Network* dis[] = {&work.discriminator};
  const Grads* dis_g[] = {&analytic.discriminator};
  const double dis_err = finite_diff_max_error(dis, dis_g, [&] { return -parts().l_gan; }, h);
  return std::max({enc_err, dec_err, dis_err});
}

VaeGanModel initial_vaegan(const VaeGanArchitecture& arch, std::uint64_t seed) {
  Rng master(seed);
  Rng init_rng = master.split();
  return make_vaegan(init_rng, arch);
}

VaeGanTrainResult train_vaegan(const Matrix& data, const VaeGanArchitecture& arch, const VaeGanTrainConfig& config) {
  return train_vaegan(initial_vaegan(arch, config.seed), data, config);
}

VaeGanTrainResult train_vaegan(VaeGanModel init, const Matrix& data, const VaeGanTrainConfig& config) {
  if (data.rows() == 0) throw ArgumentError("train_vaegan: empty dataset");
  if (config.batch_size == 0) throw ArgumentError("train_vaegan: batch_size must be positive");
  init.validate();

  const auto started = std::chrono::steady_clock::now();
  Rng master(config.seed);
  master.split();  // reserved for model initialization
  Rng shuffle_rng = master.split();
  Rng noise_rng = master.split();

  VaeGanTrainResult out{std::move(init), {}};
  VaeGanModel& model = out.model;
  out.trace.seed = config.seed;
  VaeGanOptimizers opt = VaeGanOptimizers::for_model(model, config.lrs);

  std::vector<std::size_t> order(data.rows());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    VaeGanLossParts mean;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      VaeGanLossParts p;
      try {
        p = vaegan_step(noise_rng, model, gather_rows(data, rows), config.gamma, opt);
      } catch (const NumericalError& e) {
        throw NumericalError("train_vaegan: epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index) + ": " + e.what());
      }
      const double w = static_cast<double>(rows.size()) / static_cast<double>(order.size());
      mean.l_prior += w * p.l_prior;
      mean.l_llike_disl += w * p.l_llike_disl;
      mean.l_gan += w * p.l_gan;
      mean.dis_real += w * p.dis_real;
      mean.dis_recon += w * p.dis_recon;
      mean.dis_prior += w * p.dis_prior;
    }
    out.trace.append(epoch, {{"l_prior", mean.l_prior},
                             {"l_llike_disl", mean.l_llike_disl},
                             {"l_gan", mean.l_gan},
                             {"dis_real", mean.dis_real},
                             {"dis_recon", mean.dis_recon},
                             {"dis_prior", mean.dis_prior}});
  }
  out.trace.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

Matrix generate(const VaeGanModel& model, Rng& rng, std::size_t n) {
  return forward(model.decoder, draw_matrix(rng, n, model.latent_dim)).output();
}

Matrix reconstruct(const VaeGanModel& model, Rng& rng, const Matrix& x) {
  const Matrix raw = forward(model.encoder, x).output();
  const Matrix mu = slice_cols(raw, 0, model.latent_dim);
  Matrix logvar = slice_cols(raw, model.latent_dim, model.latent_dim);
  for (double& v : logvar.data()) v = std::clamp(v, kLogVarMin, kLogVarMax);
  const Matrix eps = draw_matrix(rng, x.rows(), model.latent_dim);
  return forward(model.decoder, reparameterize_with_noise(mu, logvar, eps)).output();
}

void write_vaegan(std::ostream& out, const VaeGanCheckpoint& checkpoint) {
  const VaeGanModel& m = checkpoint.model;
  out << "varinfer-vaegan 1\n";
  out << "gamma " << format_double(checkpoint.gamma) << '\n';
  out << "feature_layer " << m.feature_layer << '\n';
  out << "latent_dim " << m.latent_dim << '\n';
  out << "encoder\n";
  write_network(out, m.encoder);
  out << "decoder\n";
  write_network(out, m.decoder);
  out << "discriminator\n";
  write_network(out, m.discriminator);
}

VaeGanCheckpoint read_vaegan(std::istream& in) {
  expect_token(in, "varinfer-vaegan");
  expect_token(in, "1");
  VaeGanCheckpoint c;
  expect_token(in, "gamma");
  if (!(in >> c.gamma)) throw ArgumentError("checkpoint: bad gamma");
  expect_token(in, "feature_layer");
  if (!(in >> c.model.feature_layer)) throw ArgumentError("checkpoint: bad feature_layer");
  expect_token(in, "latent_dim");
  if (!(in >> c.model.latent_dim)) throw ArgumentError("checkpoint: bad latent_dim");
  expect_token(in, "encoder");
  c.model.encoder = read_network(in);
  expect_token(in, "decoder");
  c.model.decoder = read_network(in);
  expect_token(in, "discriminator");
  c.model.discriminator = read_network(in);
  c.model.validate();
  return c;
}

}  // namespace varinfer
