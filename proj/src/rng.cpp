#include "cdec/rng.hpp"

namespace cdec {

namespace {
constexpr std::uint64_t kStreamMul = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kCounterMul = 0xD1B54A32D192ED03ull;
}  // namespace

std::uint64_t CounterRng::mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(mix(seed) ^ (stream * kStreamMul))) {}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  return mix(key_ + (counter + 1) * kCounterMul);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return CounterRng(seed, index).bits(0);
}

}  // namespace cdec
