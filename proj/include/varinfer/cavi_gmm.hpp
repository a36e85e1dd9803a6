#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "varinfer/matrix.hpp"
#include "varinfer/rng.hpp"

namespace varinfer {

/// Draws from  mu_j ~ N(0, sigma2),  c_i uniform over K,  x_i ~ N(mu_{c_i}, 1).
struct GmmDataset {
  std::vector<double> x;
  std::vector<double> true_means;
  std::vector<std::size_t> true_assignments;
  double sigma2 = 1.0;
};

/// Mean-field factors q(mu_j) = N(m_j, s2_j) and q(c_i) = Categorical(phi_i).
struct VariationalState {
  std::vector<double> m;
  std::vector<double> s2;
  Matrix phi;  ///< N x K, rows sum to one

  std::size_t num_components() const { return m.size(); }
};

struct CaviTrace {
  std::vector<double> elbo_per_iter;
  std::size_t iterations_run = 0;
  bool converged = false;
};

struct CaviOptions {
  std::size_t max_iters = 1000;
  double tol = 1e-6;  ///< absolute ELBO change
};

struct CaviResult {
  VariationalState state;
  CaviTrace trace;
};

/// Exactly n_per_component points per cluster, in a seeded random order.
GmmDataset generate_gmm(Rng& rng, std::size_t k, std::size_t n_per_component, double sigma2);

/// phi_ij proportional to exp(-(m_j^2 + s2_j) / 2 + x_i m_j), normalized in log space.
Matrix update_phi(std::span<const double> x, std::span<const double> m, std::span<const double> s2);

struct MeanFactors {
  std::vector<double> m;
  std::vector<double> s2;
};

/// m_j = sum_i phi_ij x_i / (1/sigma2 + sum_i phi_ij),  s2_j = 1 / (1/sigma2 + sum_i phi_ij).
MeanFactors update_means(std::span<const double> x, const Matrix& phi, double sigma2);

/// ELBO in the variational parameters, up to a constant that depends on
/// neither the data nor the variational parameters:
///   sum_j -(m_j^2 + s2_j) / (2 sigma2)
///   + sum_ij phi_ij * -(x_i^2 - 2 x_i m_j + m_j^2 + s2_j) / 2
///   + sum_j log(s2_j) / 2 - sum_ij phi_ij log phi_ij.
double elbo_gmm(std::span<const double> x, const VariationalState& state, double sigma2);

/// m_j uniform on [min x, max x], s2_j = 1, phi rows a 99/1 blend of uniform
/// and a Dirichlet(1, ..., 1) draw.
VariationalState initialize_state(std::span<const double> x, std::size_t k, Rng& rng);

/// Coordinate ascent: update_phi, update_means, ELBO; stop once the ELBO
/// moves by less than tol or after max_iters sweeps.
CaviResult cavi_fit(std::span<const double> x, std::size_t k, double sigma2, const CaviOptions& options,
                    Rng& rng);

/// Same loop from a caller-supplied starting state.
CaviResult cavi_fit_from(std::span<const double> x, double sigma2, VariationalState init,
                         const CaviOptions& options);

/// perm[i] is the true component matched to estimate i, minimizing
/// sum_i |est_i - true_{perm[i]}| by brute force. K <= 8.
std::vector<std::size_t> match_clusters(std::span<const double> est_means, std::span<const double> true_means);

/// Per-point argmax of phi.
std::vector<std::size_t> hard_assignments(const Matrix& phi);

}  // namespace varinfer
