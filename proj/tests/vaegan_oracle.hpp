#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "varinfer/network.hpp"
#include "varinfer/vaegan.hpp"

namespace varinfer::testing {

// Every loss part recomputed from network primitives and the textbook formulas.
inline VaeGanLossParts recompute(const VaeGanModel& m, const Matrix& x, const VaeGanNoise& noise) {
  const std::size_t b = x.rows(), j = m.latent_dim, l = m.feature_layer;
  const Matrix enc = forward(m.encoder, x).output();
  Matrix z(b, j);
  double prior = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t c = 0; c < j; ++c) {
      const double mu = enc(r, c);
      const double lv = std::clamp(enc(r, j + c), -10.0, 10.0);
      z(r, c) = mu + std::exp(0.5 * lv) * noise.eps(r, c);
      prior += -0.5 * (1 + lv - mu * mu - std::exp(lv));
    }
  }
  const Matrix recon = forward(m.decoder, z).output();
  const Matrix gen = forward(m.decoder, noise.z_prior).output();
  const auto dis_real = forward(m.discriminator, x);
  const auto dis_recon = forward(m.discriminator, recon);
  const auto dis_gen = forward(m.discriminator, gen);
  const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double llike = 0.0, gan = 0.0;
  const auto clamp = [](double p) { return std::clamp(p, 1e-7, 1 - 1e-7); };
  for (std::size_t r = 0; r < b; ++r) {
    const auto fr = dis_real.outputs[l].row(r);
    const auto ft = dis_recon.outputs[l].row(r);
    for (std::size_t c = 0; c < fr.size(); ++c) llike += 0.5 * (fr[c] - ft[c]) * (fr[c] - ft[c]) + kHalfLog2Pi;
    gan += std::log(clamp(dis_real.output()(r, 0))) + std::log(1 - clamp(dis_recon.output()(r, 0))) +
           std::log(1 - clamp(dis_gen.output()(r, 0)));
  }
  VaeGanLossParts p;
  p.l_prior = prior / b;
  p.l_llike_disl = llike / b;
  p.l_gan = gan / b;
  return p;
}

}  // namespace varinfer::testing
