#include "varinfer/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "varinfer/errors.hpp"

namespace varinfer {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<double> validated_probs(std::vector<double> probs) {
  if (probs.empty()) throw ArgumentError("probability vector is empty");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ArgumentError("probability entries must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw ArgumentError("probabilities sum to " + std::to_string(total) + ", not 1");
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace

GaussianParams::GaussianParams(std::vector<double> mean, std::vector<double> var)
    : mean_(std::move(mean)), var_(std::move(var)) {
  if (mean_.empty()) throw ArgumentError("Gaussian dimension must be at least 1");
  if (mean_.size() != var_.size()) throw ArgumentError("Gaussian mean/var length mismatch");
  for (std::size_t d = 0; d < mean_.size(); ++d) {
    if (!std::isfinite(mean_[d])) throw ArgumentError("Gaussian mean must be finite");
    if (!(var_[d] > 0.0) || !std::isfinite(var_[d])) {
      throw ArgumentError("Gaussian variance must be positive and finite");
    }
  }
}

GaussianParams GaussianParams::scalar(double mean, double var) {
  return GaussianParams({mean}, {var});
}

GaussianParams GaussianParams::standard(std::size_t dim) {
  return GaussianParams(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

CategoricalParams::CategoricalParams(std::vector<double> probs)
    : probs_(validated_probs(std::move(probs))) {}

CategoricalParams CategoricalParams::from_weights(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw ArgumentError("weights must have a positive finite sum");
  }
  std::vector<double> probs(weights.begin(), weights.end());
  for (double& p : probs) p /= total;
  // Division can leave the sum a few ulps off; validated_probs absorbs that.
  return CategoricalParams(std::move(probs));
}

CategoricalParams CategoricalParams::uniform(std::size_t k) {
  if (k == 0) throw ArgumentError("uniform categorical needs at least one outcome");
  return CategoricalParams(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

MixtureParams::MixtureParams(std::vector<double> weights, std::vector<GaussianParams> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.size() != components_.size()) {
    throw ArgumentError("mixture weights and components differ in length");
  }
  for (const auto& c : components_) {
    if (c.dim() != components_.front().dim()) {
      throw ArgumentError("mixture components differ in dimension");
    }
  }
}

double gaussian_logpdf(std::span<const double> x, const GaussianParams& p) {
  if (x.size() != p.dim()) throw ArgumentError("gaussian_logpdf: dimension mismatch");
  double acc = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double r = x[d] - p.mean()[d];
    acc += -0.5 * (kLog2Pi + std::log(p.var()[d])) - r * r / (2.0 * p.var()[d]);
  }
  return acc;
}

double gaussian_logpdf(double x, const GaussianParams& p) {
  return gaussian_logpdf(std::span<const double>(&x, 1), p);
}

std::vector<double> sample_gaussian(Rng& rng, const GaussianParams& p) {
  std::vector<double> out(p.dim());
  for (std::size_t d = 0; d < out.size(); ++d) {
    out[d] = p.mean()[d] + std::sqrt(p.var()[d]) * rng.normal();
  }
  return out;
}

std::size_t sample_categorical(Rng& rng, const CategoricalParams& p) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    last_positive = k;
    cumulative += p[k];
    if (u < cumulative) return k;
  }
  // u landed in the rounding gap just below 1.
  return last_positive;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double a : v) acc += std::exp(a - hi);
  return hi + std::log(acc);
}

double mixture_logpdf(double x, const MixtureParams& m) {
  if (m.dim() != 1) throw ArgumentError("mixture_logpdf: univariate mixtures only");
  std::vector<double> terms;
  terms.reserve(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.weights()[k] <= 0.0) continue;
    terms.push_back(std::log(m.weights()[k]) + gaussian_logpdf(x, m.components()[k]));
  }
  return log_sum_exp(terms);
}

double mixture_score(double x, const MixtureParams& m) {
  if (m.dim() != 1) throw ArgumentError("mixture_score: univariate mixtures only");
  std::vector<double> terms;
  std::vector<double> slopes;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.weights()[k] <= 0.0) continue;
    const auto& c = m.components()[k];
    terms.push_back(std::log(m.weights()[k]) + gaussian_logpdf(x, c));
    slopes.push_back(-(x - c.mean()[0]) / c.var()[0]);
  }
  const double norm = log_sum_exp(terms);
  double score = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) score += std::exp(terms[k] - norm) * slopes[k];
  return score;
}

double entropy_discrete(const CategoricalParams& p) {
  double h = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace varinfer
