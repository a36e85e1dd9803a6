#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "varinfer/distributions.hpp"

namespace varinfer {

/// Marker for an infinite KL divergence (support mismatch). It is the IEEE
/// +infinity value itself, produced explicitly and never through overflow.
inline constexpr double kInfiniteKl = std::numeric_limits<double>::infinity();

inline bool is_infinite_kl(double kl) { return kl == kInfiniteKl; }

/// Tabulated joint p(z, x) over |Z| x |X| finite states.
class DiscreteJoint {
 public:
  /// Largest table the enumeration oracle accepts.
  static constexpr std::size_t kMaxEntries = 1'000'000;

  /// `table` is row-major with `num_z` rows and `num_x` columns. Entries must
  /// be non-negative and sum to 1 within kProbabilityTolerance.
  DiscreteJoint(std::size_t num_z, std::size_t num_x, std::vector<double> table);

  std::size_t num_z() const { return num_z_; }
  std::size_t num_x() const { return num_x_; }
  double operator()(std::size_t z, std::size_t x) const { return table_[z * num_x_ + x]; }

 private:
  std::size_t num_z_;
  std::size_t num_x_;
  std::vector<double> table_;
};

struct PosteriorResult {
  CategoricalParams posterior;
  double log_evidence;
};

/// p(z | x) by column normalization. Throws EvidenceZeroError if p(x) = 0.
PosteriorResult exact_posterior(const DiscreteJoint& joint, std::size_t x);

struct ElboKlResult {
  double elbo;
  double kl;  ///< KL(q || p(.|x)); kInfiniteKl when q covers a zero of p(z, x).
  double log_evidence;
};

/// ELBO, KL to the exact posterior and log evidence, each by its own
/// enumeration, so that elbo + kl == log_evidence is a genuine check.
ElboKlResult elbo_kl_identity(const DiscreteJoint& joint, std::size_t x, const CategoricalParams& q);

/// mu ~ N(0, prior_var), x_i | mu ~ N(mu, 1).
struct ConjugateModel {
  double prior_var;

  explicit ConjugateModel(double prior_var);
};

double conjugate_log_evidence(const ConjugateModel& model, std::span<const double> data);

/// Exact posterior N(prior_var * sum(x) / (1 + N prior_var), prior_var / (1 + N prior_var)).
GaussianParams conjugate_posterior(const ConjugateModel& model, std::span<const double> data);

/// Closed-form E_q[log p(x, mu)] - E_q[log q(mu)] for scalar Gaussian q.
double conjugate_elbo(const ConjugateModel& model, std::span<const double> data, const GaussianParams& q);

}  // namespace varinfer
