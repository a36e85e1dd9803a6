#include "varinfer/cavi_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "varinfer/distributions.hpp"
#include "varinfer/errors.hpp"

namespace varinfer {

GmmDataset generate_gmm(Rng& rng, std::size_t k, std::size_t n_per_component, double sigma2) {
  if (k == 0) throw ArgumentError("generate_gmm: K must be >= 1");
  if (n_per_component == 0) throw ArgumentError("generate_gmm: n_per_component must be >= 1");
  if (!(sigma2 > 0.0)) throw ArgumentError("generate_gmm: sigma2 must be positive");

  GmmDataset data;
  data.sigma2 = sigma2;
  data.true_means.resize(k);
  const double sd = std::sqrt(sigma2);
  for (double& mu : data.true_means) mu = sd * rng.normal();

  const std::size_t n = k * n_per_component;
  data.true_assignments.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.true_assignments[i] = i / n_per_component;
  // Fisher-Yates, from the back.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(data.true_assignments[i - 1], data.true_assignments[j]);
  }

  data.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    data.x[i] = data.true_means[data.true_assignments[i]] + rng.normal();
  }
  return data;
}

Matrix update_phi(std::span<const double> x, std::span<const double> m, std::span<const double> s2) {
  if (m.size() != s2.size() || m.empty()) throw ArgumentError("update_phi: bad factor sizes");
  const std::size_t k = m.size();
  Matrix phi(x.size(), k);
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      logits[j] = -0.5 * (m[j] * m[j] + s2[j]) + x[i] * m[j];
    }
    const double norm = log_sum_exp(logits);
    for (std::size_t j = 0; j < k; ++j) phi(i, j) = std::exp(logits[j] - norm);
  }
  return phi;
}

MeanFactors update_means(std::span<const double> x, const Matrix& phi, double sigma2) {
  if (phi.rows() != x.size()) throw ArgumentError("update_means: phi rows != data length");
  if (!(sigma2 > 0.0)) throw ArgumentError("update_means: sigma2 must be positive");
  const std::size_t k = phi.cols();
  std::vector<double> weighted_sum(k, 0.0);
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      weighted_sum[j] += phi(i, j) * x[i];
      counts[j] += phi(i, j);
    }
  }
  MeanFactors out{std::vector<double>(k), std::vector<double>(k)};
  for (std::size_t j = 0; j < k; ++j) {
    const double precision = 1.0 / sigma2 + counts[j];
    out.m[j] = weighted_sum[j] / precision;
    out.s2[j] = 1.0 / precision;
  }
  return out;
}

double elbo_gmm(std::span<const double> x, const VariationalState& state, double sigma2) {
  const std::size_t k = state.num_components();
  if (state.s2.size() != k || state.phi.cols() != k || state.phi.rows() != x.size()) {
    throw ArgumentError("elbo_gmm: state shape does not match data");
  }
  double elbo = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double second_moment = state.m[j] * state.m[j] + state.s2[j];
    elbo += -second_moment / (2.0 * sigma2) + 0.5 * std::log(state.s2[j]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double p = state.phi(i, j);
      if (p == 0.0) continue;
      const double m = state.m[j];
      elbo += p * (-0.5 * (x[i] * x[i] - 2.0 * x[i] * m + m * m + state.s2[j]) - std::log(p));
    }
  }
  return elbo;
}

VariationalState initialize_state(std::span<const double> x, std::size_t k, Rng& rng) {
  if (x.empty()) throw ArgumentError("initialize_state: no data");
  if (k == 0) throw ArgumentError("initialize_state: K must be >= 1");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  VariationalState state;
  state.m.resize(k);
  for (double& m : state.m) m = *lo + (*hi - *lo) * rng.uniform();
  state.s2.assign(k, 1.0);

  constexpr double kJitter = 0.01;
  state.phi = Matrix(x.size(), k);
  std::vector<double> gamma(k);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double total = 0.0;
    for (double& g : gamma) {
      g = -std::log(1.0 - rng.uniform());
      total += g;
    }
    for (std::size_t j = 0; j < k; ++j) {
      state.phi(i, j) = (1.0 - kJitter) / static_cast<double>(k) + kJitter * gamma[j] / total;
    }
  }
  return state;
}

CaviResult cavi_fit_from(std::span<const double> x, double sigma2, VariationalState init,
                         const CaviOptions& options) {
  if (options.max_iters < 1) throw ArgumentError("cavi_fit: max_iters must be >= 1");
  if (!(options.tol > 0.0)) throw ArgumentError("cavi_fit: tol must be positive");

  CaviResult result{std::move(init), {}};
  VariationalState& state = result.state;
  double previous = elbo_gmm(x, state, sigma2);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    state.phi = update_phi(x, state.m, state.s2);
    MeanFactors factors = update_means(x, state.phi, sigma2);
    state.m = std::move(factors.m);
    state.s2 = std::move(factors.s2);

    const double elbo = elbo_gmm(x, state, sigma2);
    if (!std::isfinite(elbo)) throw NumericalError("cavi_fit: ELBO became non-finite");
    result.trace.elbo_per_iter.push_back(elbo);
    result.trace.iterations_run = iter + 1;
    if (std::abs(elbo - previous) < options.tol) {
      result.trace.converged = true;
      break;
    }
    previous = elbo;
  }
  return result;
}

CaviResult cavi_fit(std::span<const double> x, std::size_t k, double sigma2, const CaviOptions& options,
                    Rng& rng) {
  return cavi_fit_from(x, sigma2, initialize_state(x, k, rng), options);
}

std::vector<std::size_t> match_clusters(std::span<const double> est_means, std::span<const double> true_means) {
  if (est_means.size() != true_means.size()) throw ArgumentError("match_clusters: size mismatch");
  if (est_means.size() > 8) throw UnsupportedSizeError("match_clusters: K > 8 is not supported");

  std::vector<std::size_t> perm(est_means.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) cost += std::abs(est_means[i] - true_means[perm[i]]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<std::size_t> hard_assignments(const Matrix& phi) {
  std::vector<std::size_t> out(phi.rows());
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    const auto row = phi.row(i);
    out[i] = static_cast<std::size_t>(std::distance(row.begin(), std::max_element(row.begin(), row.end())));
  }
  return out;
}

}  // namespace varinfer
