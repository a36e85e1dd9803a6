#include "varinfer/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "varinfer/errors.hpp"

namespace varinfer {

QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw ArgumentError("gauss_hermite: need at least one node");
  constexpr double kPiToMinusQuarter = 0.7511255444649425;
  constexpr double kEps = 1e-14;
  constexpr int kMaxNewton = 20;

  // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix with
  // off-diagonal sqrt(k / 2). Newton on the orthonormal recurrence polishes
  // them and supplies the derivative for the weights.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
  for (Eigen::Index k = 0; k < sub.size(); ++k) sub[k] = std::sqrt(0.5 * static_cast<double>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigenvalue solve failed");

  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
    double derivative = 0.0;
    for (int it = 0; it < kMaxNewton; ++it) {
      double p1 = kPiToMinusQuarter;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
      }
      derivative = std::sqrt(2.0 * nd) * p2;
      const double step = p1 / derivative;
      // Far-tail polynomials overflow; the eigenvalue is already accurate there.
      if (!std::isfinite(step)) break;
      z -= step;
      if (std::abs(step) <= kEps * std::max(1.0, std::abs(z))) break;
    }
    if (!std::isfinite(z)) throw NumericalError("gauss_hermite: node became non-finite");
    rule.nodes[i] = z;
    const double w = 2.0 / (derivative * derivative);
    rule.weights[i] = std::isfinite(w) ? w : 0.0;
  }
  return rule;
}

const QuadratureRule& gauss_hermite_512() {
  static const QuadratureRule rule = gauss_hermite(512);
  return rule;
}

}  // namespace varinfer
