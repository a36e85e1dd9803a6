#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "varinfer/distributions.hpp"
#include "varinfer/errors.hpp"
#include "varinfer/oracle.hpp"

namespace varinfer {

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;  ///< 0 for analytic results
  std::size_t n_samples = 0;

  bool exact() const { return std_error == 0.0; }
};

/// sum p log(p / q), with 0 log(0 / q) = 0 and kInfiniteKl when p > 0 = q.
double kl_discrete(const CategoricalParams& p, const CategoricalParams& q);

/// Cross-entropy -sum p log q; kInfiniteKl-style +inf when p > 0 = q.
double cross_entropy_discrete(const CategoricalParams& p, const CategoricalParams& q);

/// Closed-form KL(p || q) between diagonal Gaussians.
double kl_gaussian(const GaussianParams& p, const GaussianParams& q);

using LogDensity = std::function<double(std::span<const double>)>;

/// Monte Carlo estimate of KL(q || p) = E_q[log q - log p] from n draws of q.
/// A non-finite log p at any draw yields value kInfiniteKl.
KlEstimate kl_reverse_mc(Rng& rng, const GaussianParams& q, const LogDensity& log_p, std::size_t n);

/// Forward-KL optimal Gaussian for a univariate mixture (moment matching).
GaussianParams m_projection(const MixtureParams& m);

/// KL(q || p) for scalar Gaussian q and univariate mixture p by 512-node
/// Gauss-Hermite quadrature under q.
double reverse_kl_quadrature(const GaussianParams& q, const MixtureParams& p);

/// KL(p || q), the forward direction, by the same rule applied under each
/// mixture component.
double forward_kl_quadrature(const MixtureParams& p, const GaussianParams& q);

struct ReverseKlGradient {
  double value;
  double d_mean;
  double d_log_var;
};

/// reverse_kl_quadrature with analytic partials in (mean, log var).
ReverseKlGradient reverse_kl_quadrature_grad(const GaussianParams& q, const MixtureParams& p);

struct IProjectionOptions {
  std::size_t steps = 2000;
  double step_size = 0.05;
};

/// Raised when an optimizer iterate goes non-finite; carries the last finite one.
class OptimizationError : public NumericalError {
 public:
  OptimizationError(const std::string& what, GaussianParams last_finite)
      : NumericalError(what), last_finite_(std::move(last_finite)) {}

  const GaussianParams& last_finite() const { return last_finite_; }

 private:
  GaussianParams last_finite_;
};

/// Reverse-KL (mode-seeking) Gaussian fit by plain gradient descent in
/// (mean, log var). Throws OptimizationError if an iterate goes non-finite.
GaussianParams i_projection(const MixtureParams& m, const GaussianParams& init,
                            const IProjectionOptions& options = {});

}  // namespace varinfer
