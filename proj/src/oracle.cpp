#include "varinfer/oracle.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "varinfer/errors.hpp"

namespace varinfer {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

DiscreteJoint::DiscreteJoint(std::size_t num_z, std::size_t num_x, std::vector<double> table)
    : num_z_(num_z), num_x_(num_x), table_(std::move(table)) {
  if (num_z_ == 0 || num_x_ == 0) throw ArgumentError("DiscreteJoint: empty state space");
  if (num_z_ > kMaxEntries / num_x_) {
    throw UnsupportedSizeError("DiscreteJoint: more than 1e6 entries");
  }
  if (table_.size() != num_z_ * num_x_) throw ArgumentError("DiscreteJoint: table size mismatch");
  double total = 0.0;
  for (double p : table_) {
    if (!std::isfinite(p) || p < 0.0) throw ArgumentError("DiscreteJoint: invalid entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw ArgumentError("DiscreteJoint: table does not sum to 1");
  }
  for (double& p : table_) p /= total;
}

PosteriorResult exact_posterior(const DiscreteJoint& joint, std::size_t x) {
  if (x >= joint.num_x()) throw ArgumentError("exact_posterior: observation out of range");
  std::vector<double> column(joint.num_z());
  for (std::size_t z = 0; z < joint.num_z(); ++z) column[z] = joint(z, x);
  const double evidence = std::accumulate(column.begin(), column.end(), 0.0);
  if (!(evidence > 0.0)) throw EvidenceZeroError("exact_posterior: p(x) = 0");
  return {CategoricalParams::from_weights(column), std::log(evidence)};
}

ElboKlResult elbo_kl_identity(const DiscreteJoint& joint, std::size_t x, const CategoricalParams& q) {
  if (q.size() != joint.num_z()) throw ArgumentError("elbo_kl_identity: q has wrong length");
  const auto [posterior, log_evidence] = exact_posterior(joint, x);

  double elbo = 0.0;
  double kl = 0.0;
  for (std::size_t z = 0; z < q.size(); ++z) {
    const double qz = q[z];
    if (qz == 0.0) continue;
    const double pzx = joint(z, x);
    if (pzx == 0.0) {
      return {-std::numeric_limits<double>::infinity(), kInfiniteKl, log_evidence};
    }
    const double log_q = std::log(qz);
    elbo += qz * (std::log(pzx) - log_q);
    kl += qz * (log_q - std::log(posterior[z]));
  }
  return {elbo, kl, log_evidence};
}

ConjugateModel::ConjugateModel(double prior_var_) : prior_var(prior_var_) {
  if (!(prior_var > 0.0) || !std::isfinite(prior_var)) {
    throw ArgumentError("ConjugateModel: prior variance must be positive");
  }
}

double conjugate_log_evidence(const ConjugateModel& model, std::span<const double> data) {
  if (data.empty()) throw ArgumentError("conjugate_log_evidence: no data");
  const double n = static_cast<double>(data.size());
  const double s2 = model.prior_var;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : data) {
    sum += v;
    sum_sq += v * v;
  }
  // Marginal N(0, s2 * J + I): det = 1 + n s2, inverse by Sherman-Morrison.
  const double denom = 1.0 + n * s2;
  return -0.5 * (n * kLog2Pi + std::log1p(n * s2) + sum_sq - s2 * sum * sum / denom);
}

GaussianParams conjugate_posterior(const ConjugateModel& model, std::span<const double> data) {
  if (data.empty()) throw ArgumentError("conjugate_posterior: no data");
  const double n = static_cast<double>(data.size());
  const double sum = std::accumulate(data.begin(), data.end(), 0.0);
  const double denom = 1.0 + n * model.prior_var;
  return GaussianParams::scalar(model.prior_var * sum / denom, model.prior_var / denom);
}

double conjugate_elbo(const ConjugateModel& model, std::span<const double> data, const GaussianParams& q) {
  if (q.dim() != 1) throw ArgumentError("conjugate_elbo: q must be scalar");
  if (data.empty()) throw ArgumentError("conjugate_elbo: no data");
  const double m = q.mean()[0];
  const double s = q.var()[0];
  const double sigma2 = model.prior_var;

  double expected_log_joint = -0.5 * (kLog2Pi + std::log(sigma2)) - (m * m + s) / (2.0 * sigma2);
  for (double v : data) {
    const double r = v - m;
    expected_log_joint += -0.5 * kLog2Pi - 0.5 * (r * r + s);
  }
  const double entropy = 0.5 * (kLog2Pi + 1.0 + std::log(s));
  return expected_log_joint + entropy;
}

}  // namespace varinfer
