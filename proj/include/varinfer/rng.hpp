#pragma once

#include <cstdint>

namespace varinfer {

/// Counter-based 64-bit generator.
///
/// The k-th raw draw (k = 1, 2, ...) of a stream with seed `s` is
/// `mix(s + k * 0x9E3779B97F4A7C15)` where `mix` is the SplitMix64 finalizer
/// (xor-shift 30, multiply 0xBF58476D1CE4E5B9, xor-shift 27, multiply
/// 0x94D049BB133111EB, xor-shift 31), all arithmetic modulo 2^64.
///
/// Derived quantities consume raw draws as follows:
///   uniform()  : (raw >> 11) * 2^-53, in [0, 1); one draw.
///   normal()   : Box-Muller cosine branch, u1 = 1 - uniform(),
///                u2 = uniform(), sqrt(-2 ln u1) * cos(2 pi u2); two draws.
///   below(n)   : raw % n, redrawing while raw >= 2^64 - (2^64 mod n).
///   split()    : child stream seeded with one raw draw of the parent.
///
/// A stream is fully described by (seed, counter), so any implementation of
/// the rules above reproduces it exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double normal();

  /// Uniform index in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; advances this stream by one draw.
  Rng split();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace varinfer
