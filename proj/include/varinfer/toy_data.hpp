#pragma once

#include <cstddef>

#include "varinfer/matrix.hpp"
#include "varinfer/rng.hpp"

namespace varinfer {

/// n binary 8x8 images (64 columns, row-major pixels). Each row picks
/// horizontal or vertical stripes with probability 1/2, then flips every
/// pixel independently with probability flip_prob.
Matrix two_pattern_images(Rng& rng, std::size_t n, double flip_prob = 0.05);

/// n points on two interleaved half circles with isotropic Gaussian jitter.
Matrix two_moons(Rng& rng, std::size_t n, double noise = 0.1);

}  // namespace varinfer
