#include "varinfer/vae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "varinfer/checkpoint.hpp"
#include "varinfer/errors.hpp"

namespace varinfer {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

// d log p(x | out) / d out
Matrix log_likelihood_grad(Likelihood kind, const Matrix& x, const Matrix& out) {
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = x.data()[i];
    const double oi = out.data()[i];
    g.data()[i] = kind == Likelihood::kBernoulli ? xi - sigmoid(oi) : xi - oi;
  }
  return g;
}

Matrix draw_noise(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix eps(rows, cols);
  for (double& e : eps.data()) e = rng.normal();
  return eps;
}

std::string_view likelihood_name(Likelihood kind) {
  return kind == Likelihood::kBernoulli ? "bernoulli" : "gaussian-unit-var";
}

Likelihood parse_likelihood(const std::string& name) {
  if (name == "bernoulli") return Likelihood::kBernoulli;
  if (name == "gaussian-unit-var") return Likelihood::kGaussianUnitVar;
  throw ArgumentError("unknown likelihood '" + name + "'");
}

}  // namespace

void VaeModel::validate() const {
  if (latent_dim == 0) throw ArgumentError("VaeModel: latent_dim must be positive");
  if (encoder.depth() == 0 || decoder.depth() == 0) throw ArgumentError("VaeModel: missing network");
  if (encoder.output_dim() != 2 * latent_dim) throw ArgumentError("VaeModel: encoder output must be 2J wide");
  if (decoder.input_dim() != latent_dim) throw ArgumentError("VaeModel: decoder input must be J wide");
  if (decoder.output_dim() != encoder.input_dim()) {
    throw ArgumentError("VaeModel: decoder output width must equal data width");
  }
}

VaeModel make_vae(Rng& rng, const VaeArchitecture& arch) {
  const std::size_t enc_dims[] = {arch.input_dim, arch.hidden, 2 * arch.latent};
  const std::size_t dec_dims[] = {arch.latent, arch.hidden, arch.input_dim};
  const Activation acts[] = {Activation::kTanh, Activation::kIdentity};
  VaeModel model;
  model.encoder = Network::create(rng, enc_dims, acts);
  model.decoder = Network::create(rng, dec_dims, acts);
  model.latent_dim = arch.latent;
  model.likelihood = arch.likelihood;
  model.validate();
  return model;
}

Encoding encode(const VaeModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) throw ArgumentError("encode: data width does not match encoder");
  const Matrix raw = forward(model.encoder, x).output();
  Encoding e{slice_cols(raw, 0, model.latent_dim), slice_cols(raw, model.latent_dim, model.latent_dim)};
  for (double& v : e.logvar.data()) v = std::clamp(v, kLogVarMin, kLogVarMax);
  return e;
}

Matrix reparameterize_with_noise(const Matrix& mu, const Matrix& logvar, const Matrix& eps) {
  if (!mu.same_shape(logvar) || !mu.same_shape(eps)) throw ArgumentError("reparameterize: shape mismatch");
  Matrix z(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z.data()[i] = mu.data()[i] + std::exp(0.5 * logvar.data()[i]) * eps.data()[i];
  }
  return z;
}

Reparameterized reparameterize(Rng& rng, const Matrix& mu, const Matrix& logvar) {
  Matrix eps = draw_noise(rng, mu.rows(), mu.cols());
  Matrix z = reparameterize_with_noise(mu, logvar, eps);
  return {std::move(z), std::move(eps)};
}

std::vector<double> kl_to_standard_normal(const Matrix& mu, const Matrix& logvar) {
  if (!mu.same_shape(logvar)) throw ArgumentError("kl_to_standard_normal: shape mismatch");
  std::vector<double> kl(mu.rows(), 0.0);
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < mu.cols(); ++c) {
      const double m = mu(r, c);
      const double lv = logvar(r, c);
      acc += 1.0 + lv - m * m - std::exp(lv);
    }
    kl[r] = -0.5 * acc;
  }
  return kl;
}

std::vector<double> log_likelihood(Likelihood kind, const Matrix& x, const Matrix& out) {
  if (!x.same_shape(out)) throw ArgumentError("log_likelihood: shape mismatch");
  std::vector<double> ll(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double a = out(r, c);
      if (kind == Likelihood::kBernoulli) {
        acc += x(r, c) * a - softplus(a);
      } else {
        const double d = x(r, c) - a;
        acc += -0.5 * d * d - 0.5 * kLog2Pi;
      }
    }
    ll[r] = acc;
  }
  return ll;
}

Matrix observation_means(Likelihood kind, const Matrix& out) {
  if (kind == Likelihood::kGaussianUnitVar) return out;
  Matrix m = out;
  for (double& v : m.data()) v = sigmoid(v);
  return m;
}

SgvbResult sgvb_loss_and_grads(Rng& rng, const VaeModel& model, const Matrix& x, const SgvbConfig& config) {
  std::vector<Matrix> noise;
  for (std::size_t l = 0; l < config.samples; ++l) noise.push_back(draw_noise(rng, x.rows(), model.latent_dim));
  return sgvb_loss_and_grads(model, x, noise, config);
}

SgvbResult sgvb_loss_and_grads(const VaeModel& model, const Matrix& x, std::span<const Matrix> noise,
                               const SgvbConfig& config) {
  if (config.samples < 1 || noise.size() != config.samples) {
    throw ArgumentError("sgvb: need L >= 1 noise matrices");
  }
  if (!(config.beta > 0.0)) throw ArgumentError("sgvb: beta must be positive");
  if (!(config.capacity >= 0.0)) throw ArgumentError("sgvb: capacity must be non-negative");
  if (x.rows() == 0) throw ArgumentError("sgvb: empty batch");
  if (x.cols() != model.input_dim()) throw ArgumentError("sgvb: data width does not match encoder");

  const std::size_t batch = x.rows();
  const std::size_t latent = model.latent_dim;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double inv_samples = 1.0 / static_cast<double>(config.samples);

  const ForwardCache enc_cache = forward(model.encoder, x);
  const Matrix& raw = enc_cache.output();
  const Matrix mu = slice_cols(raw, 0, latent);
  Matrix logvar = slice_cols(raw, latent, latent);
  for (double& v : logvar.data()) v = std::clamp(v, kLogVarMin, kLogVarMax);

  SgvbResult result{{}, {}, Grads::zeros_like(model.decoder)};
  Matrix d_mu(batch, latent);
  Matrix d_logvar(batch, latent);
  std::vector<double> recon(batch, 0.0);

  for (std::size_t l = 0; l < config.samples; ++l) {
    const Matrix& eps = noise[l];
    if (eps.rows() != batch || eps.cols() != latent) throw ArgumentError("sgvb: noise shape mismatch");
    const Matrix z = reparameterize_with_noise(mu, logvar, eps);
    const ForwardCache dec_cache = forward(model.decoder, z);
    const std::vector<double> ll = log_likelihood(model.likelihood, x, dec_cache.output());
    for (std::size_t r = 0; r < batch; ++r) recon[r] += inv_samples * ll[r];

    // Minimizing -recon: upstream is -(1 / (B L)) d log p / d out.
    Matrix upstream = log_likelihood_grad(model.likelihood, x, dec_cache.output());
    for (double& g : upstream.data()) g *= -inv_batch * inv_samples;
    const Grads dec_grads = backward(model.decoder, dec_cache, upstream);
    result.decoder.add_scaled(dec_grads, 1.0);
    for (std::size_t i = 0; i < d_mu.size(); ++i) {
      const double dz = dec_grads.input.data()[i];
      d_mu.data()[i] += dz;
      d_logvar.data()[i] += dz * 0.5 * std::exp(0.5 * logvar.data()[i]) * eps.data()[i];
    }
  }

  const std::vector<double> kl = kl_to_standard_normal(mu, logvar);
  VaeLossParts& parts = result.parts;
  parts.beta = config.beta;
  parts.capacity = config.capacity;
  for (std::size_t r = 0; r < batch; ++r) {
    const double gap = kl[r] - config.capacity;
    parts.recon += inv_batch * recon[r];
    parts.kl += inv_batch * kl[r];
    parts.total_elbo += inv_batch * (recon[r] - config.beta * std::abs(gap));

    // d|gap|/d kl taken as 0 exactly at the hinge.
    const double sign = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    const double weight = config.beta * sign * inv_batch;
    for (std::size_t c = 0; c < latent; ++c) {
      d_mu(r, c) += weight * mu(r, c);
      d_logvar(r, c) += weight * 0.5 * (std::exp(logvar(r, c)) - 1.0);
    }
  }
  if (!std::isfinite(parts.recon)) throw NumericalError("sgvb: non-finite reconstruction term");
  if (!std::isfinite(parts.kl)) throw NumericalError("sgvb: non-finite KL term");

  // The clamp passes no gradient outside [kLogVarMin, kLogVarMax].
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t c = 0; c < latent; ++c) {
      const double v = raw(r, latent + c);
      if (v < kLogVarMin || v > kLogVarMax) d_logvar(r, c) = 0.0;
    }
  }
  result.encoder = backward(model.encoder, enc_cache, hconcat(d_mu, d_logvar));
  return result;
}

double vae_gradient_check(const VaeModel& model, const Matrix& x, std::span<const Matrix> noise,
                          const SgvbConfig& config, double h) {
  VaeModel work = model;
  const SgvbResult analytic = sgvb_loss_and_grads(work, x, noise, config);
  auto loss = [&]() { return -sgvb_loss_and_grads(work, x, noise, config).parts.total_elbo; };
  Network* nets[] = {&work.encoder, &work.decoder};
  const Grads* grads[] = {&analytic.encoder, &analytic.decoder};
  return finite_diff_max_error(nets, grads, loss, h);
}

VaeModel initial_vae(const VaeArchitecture& arch, std::uint64_t seed) {
  Rng master(seed);
  Rng init_rng = master.split();
  return make_vae(init_rng, arch);
}

VaeTrainResult train_vae(const Matrix& data, const VaeArchitecture& arch, const VaeTrainConfig& config) {
  return train_vae(initial_vae(arch, config.seed), data, config);
}

VaeTrainResult train_vae(VaeModel init, const Matrix& data, const VaeTrainConfig& config) {
  if (data.rows() == 0) throw ArgumentError("train_vae: empty dataset");
  if (config.batch_size == 0) throw ArgumentError("train_vae: batch_size must be positive");
  if (!(config.lr >= 0.0)) throw ArgumentError("train_vae: lr must be non-negative");
  init.validate();

  const auto started = std::chrono::steady_clock::now();
  Rng master(config.seed);
  master.split();  // reserved for model initialization
  Rng shuffle_rng = master.split();
  Rng noise_rng = master.split();

  VaeTrainResult out{std::move(init), {}};
  VaeModel& model = out.model;
  out.trace.seed = config.seed;
  AdamConfig adam;
  adam.lr = config.lr;
  AdamState enc_state = AdamState::for_network(model.encoder, adam);
  AdamState dec_state = AdamState::for_network(model.decoder, adam);
  const SgvbConfig sgvb{config.samples, config.beta, config.capacity};

  std::vector<std::size_t> order(data.rows());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double recon = 0.0, kl = 0.0, total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Matrix batch = gather_rows(data, rows);
      SgvbResult step;
      try {
        step = sgvb_loss_and_grads(noise_rng, model, batch, sgvb);
      } catch (const NumericalError& e) {
        throw NumericalError("train_vae: epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(step.parts.total_elbo) || !step.encoder.all_finite() || !step.decoder.all_finite()) {
        throw NumericalError("train_vae: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      const double weight = static_cast<double>(rows.size()) / static_cast<double>(order.size());
      recon += weight * step.parts.recon;
      kl += weight * step.parts.kl;
      total += weight * step.parts.total_elbo;
      adam_step(model.encoder, step.encoder, enc_state);
      adam_step(model.decoder, step.decoder, dec_state);
    }
    out.trace.append(epoch, {{"recon", recon}, {"kl", kl}, {"total_elbo", total}, {"loss", -total}});
  }
  out.trace.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

VaeLossParts evaluate_vae(const VaeModel& model, const Matrix& data, Rng& rng, const SgvbConfig& config) {
  return sgvb_loss_and_grads(rng, model, data, config).parts;
}

Matrix reconstruct(const VaeModel& model, Rng& rng, const Matrix& x) {
  const Encoding e = encode(model, x);
  const Reparameterized r = reparameterize(rng, e.mu, e.logvar);
  return observation_means(model.likelihood, forward(model.decoder, r.z).output());
}

Matrix generate(const VaeModel& model, Rng& rng, std::size_t n) {
  const Matrix z = draw_noise(rng, n, model.latent_dim);
  return observation_means(model.likelihood, forward(model.decoder, z).output());
}

void write_vae(std::ostream& out, const VaeModel& model) {
  out << "varinfer-vae 1\n";
  out << "latent_dim " << model.latent_dim << '\n';
  out << "likelihood " << likelihood_name(model.likelihood) << '\n';
  out << "encoder\n";
  write_network(out, model.encoder);
  out << "decoder\n";
  write_network(out, model.decoder);
}

VaeModel read_vae(std::istream& in) {
  expect_token(in, "varinfer-vae");
  expect_token(in, "1");
  VaeModel model;
  expect_token(in, "latent_dim");
  if (!(in >> model.latent_dim)) throw ArgumentError("checkpoint: bad latent_dim");
  expect_token(in, "likelihood");
  std::string kind;
  in >> kind;
  model.likelihood = parse_likelihood(kind);
  expect_token(in, "encoder");
  model.encoder = read_network(in);
  expect_token(in, "decoder");
  model.decoder = read_network(in);
  model.validate();
  return model;
}

}  // namespace varinfer
