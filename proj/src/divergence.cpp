#include "varinfer/divergence.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "varinfer/quadrature.hpp"

namespace varinfer {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

double kl_discrete(const CategoricalParams& p, const CategoricalParams& q) {
  if (p.size() != q.size()) throw ArgumentError("kl_discrete: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfiniteKl;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative value for p == q.
  return kl < 0.0 ? 0.0 : kl;
}

double cross_entropy_discrete(const CategoricalParams& p, const CategoricalParams& q) {
  if (p.size() != q.size()) throw ArgumentError("cross_entropy_discrete: length mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfiniteKl;
    h -= p[i] * std::log(q[i]);
  }
  return h;
}

double kl_gaussian(const GaussianParams& p, const GaussianParams& q) {
  if (p.dim() != q.dim()) throw ArgumentError("kl_gaussian: dimension mismatch");
  double kl = 0.0;
  for (std::size_t d = 0; d < p.dim(); ++d) {
    const double diff = p.mean()[d] - q.mean()[d];
    const double ratio = p.var()[d] / q.var()[d];
    kl += 0.5 * (-std::log(ratio) + ratio + diff * diff / q.var()[d] - 1.0);
  }
  return kl;
}

KlEstimate kl_reverse_mc(Rng& rng, const GaussianParams& q, const LogDensity& log_p, std::size_t n) {
  if (n < 2) throw ArgumentError("kl_reverse_mc: need at least two samples");
  // Welford accumulation of log q - log p.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> z = sample_gaussian(rng, q);
    const double lp = log_p(z);
    if (!std::isfinite(lp)) return {kInfiniteKl, 0.0, i + 1};
    const double term = gaussian_logpdf(z, q) - lp;
    const double delta = term - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (term - mean);
  }
  const double nd = static_cast<double>(n);
  const double sample_var = m2 / (nd - 1.0);
  return {mean, std::sqrt(sample_var / nd), n};
}

GaussianParams m_projection(const MixtureParams& m) {
  if (m.dim() != 1) throw ArgumentError("m_projection: univariate mixtures only");
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double w = m.weights()[k];
    const double mu = m.components()[k].mean()[0];
    mean += w * mu;
    second += w * (m.components()[k].var()[0] + mu * mu);
  }
  return GaussianParams::scalar(mean, second - mean * mean);
}

ReverseKlGradient reverse_kl_quadrature_grad(const GaussianParams& q, const MixtureParams& p) {
  if (q.dim() != 1 || p.dim() != 1) throw ArgumentError("reverse_kl_quadrature: univariate only");
  const QuadratureRule& rule = gauss_hermite_512();
  const double mean = q.mean()[0];
  const double var = q.var()[0];
  const double sd = std::sqrt(var);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);

  std::vector<double> log_norm;
  std::vector<double> centers;
  std::vector<double> precisions;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p.weights()[k] <= 0.0) continue;
    const auto& c = p.components()[k];
    log_norm.push_back(std::log(p.weights()[k]) - 0.5 * (kLog2Pi + std::log(c.var()[0])));
    centers.push_back(c.mean()[0]);
    precisions.push_back(1.0 / c.var()[0]);
  }
  std::vector<double> terms(centers.size());

  // E_q[f(z)] = sum_i w_i / sqrt(pi) f(mean + sqrt(2 var) x_i).
  double expected_log_p = 0.0;
  double d_mean = 0.0;
  double d_sd = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double w = rule.weights[i] * inv_sqrt_pi;
    if (w == 0.0) continue;
    const double offset = std::numbers::sqrt2 * rule.nodes[i];
    const double z = mean + sd * offset;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double r = z - centers[k];
      terms[k] = log_norm[k] - 0.5 * r * r * precisions[k];
    }
    const double log_p = log_sum_exp(terms);
    double score = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      score -= std::exp(terms[k] - log_p) * (z - centers[k]) * precisions[k];
    }
    expected_log_p += w * log_p;
    d_mean += w * score;
    d_sd += w * score * offset;
  }
  const double neg_entropy = -0.5 * (kLog2Pi + 1.0 + std::log(var));
  // d sd / d log var = sd / 2.
  return {neg_entropy - expected_log_p, -d_mean, -0.5 - 0.5 * sd * d_sd};
}

double reverse_kl_quadrature(const GaussianParams& q, const MixtureParams& p) {
  return reverse_kl_quadrature_grad(q, p).value;
}

double forward_kl_quadrature(const MixtureParams& p, const GaussianParams& q) {
  if (q.dim() != 1 || p.dim() != 1) throw ArgumentError("forward_kl_quadrature: univariate only");
  const QuadratureRule& rule = gauss_hermite_512();
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double wk = p.weights()[k];
    if (wk <= 0.0) continue;
    const double mean = p.components()[k].mean()[0];
    const double sd = std::sqrt(p.components()[k].var()[0]);
    double inner = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double w = rule.weights[i] * inv_sqrt_pi;
      if (w == 0.0) continue;
      const double z = mean + sd * std::numbers::sqrt2 * rule.nodes[i];
      inner += w * (mixture_logpdf(z, p) - gaussian_logpdf(z, q));
    }
    acc += wk * inner;
  }
  return acc;
}

GaussianParams i_projection(const MixtureParams& m, const GaussianParams& init,
                            const IProjectionOptions& options) {
  if (init.dim() != 1 || m.dim() != 1) throw ArgumentError("i_projection: univariate only");
  if (options.steps < 1) throw ArgumentError("i_projection: steps must be >= 1");
  if (!(options.step_size > 0.0)) throw ArgumentError("i_projection: step_size must be positive");

  double mean = init.mean()[0];
  double log_var = std::log(init.var()[0]);
  GaussianParams last = init;
  for (std::size_t step = 0; step < options.steps; ++step) {
    const ReverseKlGradient g = reverse_kl_quadrature_grad(last, m);
    mean -= options.step_size * g.d_mean;
    log_var -= options.step_size * g.d_log_var;
    const double var = std::exp(log_var);
    if (!std::isfinite(mean) || !std::isfinite(var) || !(var > 0.0)) {
      throw OptimizationError("i_projection: iterate became non-finite at step " +
                                  std::to_string(step),
                              last);
    }
    last = GaussianParams::scalar(mean, var);
  }
  return last;
}

}  // namespace varinfer
