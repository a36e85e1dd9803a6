#include "varinfer/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace varinfer {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix(seed_ + counter_ * kGamma);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  // 2^64 mod n, computed without overflowing.
  const std::uint64_t rem = (max % n + 1) % n;
  const std::uint64_t limit = rem == 0 ? 0 : max - rem + 1;
  while (true) {
    const std::uint64_t raw = next_u64();
    if (limit == 0 || raw < limit) return raw % n;
  }
}

Rng Rng::split() { return Rng(next_u64()); }

}  // namespace varinfer
