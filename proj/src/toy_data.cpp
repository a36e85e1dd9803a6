#include "varinfer/toy_data.hpp"

#include <cmath>
#include <numbers>

#include "varinfer/errors.hpp"

namespace varinfer {

Matrix two_pattern_images(Rng& rng, std::size_t n, double flip_prob) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ArgumentError("two_pattern_images: bad flip probability");
  constexpr std::size_t kSide = 8;
  Matrix out(n, kSide * kSide);
  for (std::size_t i = 0; i < n; ++i) {
    const bool horizontal = rng.uniform() < 0.5;
    for (std::size_t r = 0; r < kSide; ++r) {
      for (std::size_t c = 0; c < kSide; ++c) {
        bool on = horizontal ? r % 2 == 0 : c % 2 == 0;
        if (rng.uniform() < flip_prob) on = !on;
        out(i, r * kSide + c) = on ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

Matrix two_moons(Rng& rng, std::size_t n, double noise) {
  if (!(noise >= 0.0)) throw ArgumentError("two_moons: noise must be non-negative");
  Matrix out(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    const bool upper = i % 2 == 0;
    const double x = upper ? std::cos(t) : 1.0 - std::cos(t);
    const double y = upper ? std::sin(t) : 0.5 - std::sin(t);
    out(i, 0) = x + noise * rng.normal();
    out(i, 1) = y + noise * rng.normal();
  }
  return out;
}

}  // namespace varinfer
