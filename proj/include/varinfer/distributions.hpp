#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "varinfer/rng.hpp"

namespace varinfer {

/// Tolerance on the sum of a probability vector before renormalization.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Diagonal-covariance Gaussian. Immutable once constructed.
class GaussianParams {
 public:
  /// Throws ArgumentError on empty or mismatched vectors, non-finite means or
  /// non-positive variances.
  GaussianParams(std::vector<double> mean, std::vector<double> var);

  static GaussianParams scalar(double mean, double var);
  static GaussianParams standard(std::size_t dim);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& var() const { return var_; }

  bool operator==(const GaussianParams&) const = default;

 private:
  std::vector<double> mean_;
  std::vector<double> var_;
};

/// Probability vector; renormalized to sum exactly (in floating point) to one.
class CategoricalParams {
 public:
  /// Entries must be finite and >= 0, sum within kProbabilityTolerance of 1.
  explicit CategoricalParams(std::vector<double> probs);

  /// Normalizes arbitrary non-negative weights with a positive sum.
  static CategoricalParams from_weights(std::span<const double> weights);
  static CategoricalParams uniform(std::size_t k);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Finite mixture of diagonal Gaussians sharing one dimension.
class MixtureParams {
 public:
  MixtureParams(std::vector<double> weights, std::vector<GaussianParams> components);

  std::size_t size() const { return components_.size(); }
  std::size_t dim() const { return components_.front().dim(); }
  const CategoricalParams& weights() const { return weights_; }
  const std::vector<GaussianParams>& components() const { return components_; }

 private:
  CategoricalParams weights_;
  std::vector<GaussianParams> components_;
};

double gaussian_logpdf(std::span<const double> x, const GaussianParams& p);
double gaussian_logpdf(double x, const GaussianParams& p);

std::vector<double> sample_gaussian(Rng& rng, const GaussianParams& p);

std::size_t sample_categorical(Rng& rng, const CategoricalParams& p);

/// log sum_k w_k N(x; comp_k), evaluated with log-sum-exp. Univariate only.
double mixture_logpdf(double x, const MixtureParams& m);

/// d/dx log p(x) for a univariate mixture.
double mixture_score(double x, const MixtureParams& m);

/// Entropy in nats with the convention 0 log 0 = 0.
double entropy_discrete(const CategoricalParams& p);

/// Stable log(sum(exp(v))); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

}  // namespace varinfer
