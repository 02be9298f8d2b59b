#pragma once

#include <cstdint>

namespace cdec {

// Counter-based, splittable generator. Every draw is a pure function of
// (seed, stream, counter), so results do not depend on call order or thread
// scheduling and are identical on every platform.
//
//   key      = mix(mix(seed) ^ (stream * 0x9E3779B97F4A7C15))
//   draw(c)  = mix(key + (c + 1) * 0xD1B54A32D192ED03)
//
// mix() is the SplitMix64 finalizer. Decoding uses stream = request index and
// counter = step index.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t counter) const;

  std::uint64_t key() const { return key_; }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t key_;
};

// Seed for child index `index` of `seed` (dataset items, grid cells).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace cdec
