#pragma once

#include <cstddef>
#include <vector>

namespace varinfer {

/// Gauss-Hermite rule for integrals of the form  int f(x) exp(-x^2) dx.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch nodes refined by Newton on orthonormal Hermite polynomials. Weights of
/// far-tail nodes underflow to zero for large n, which is harmless.
QuadratureRule gauss_hermite(std::size_t n);

/// The fixed 512-node rule used by the reverse-KL projection, built once.
const QuadratureRule& gauss_hermite_512();

}  // namespace varinfer
