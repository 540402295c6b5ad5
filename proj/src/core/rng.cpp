#include "imagine/core/rng.hpp"

namespace imagine {

namespace {

// splitmix64 finalizer; decorrelates nearby seeds before they reach the engine.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

Rng Rng::fork(std::uint64_t stream_id) const {
  return Rng(mix(seed_ ^ mix(stream_id + 0x632BE59BD9B4E019ULL)));
}

float Rng::uniform() {
  // 24 random mantissa bits -> exactly representable floats in [0, 1).
  return static_cast<float>(engine_() >> 40) * 0x1.0p-24F;
}

float Rng::uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

float Rng::normal() { return normal_(engine_); }

bool Rng::bernoulli(double p) {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p;
}

std::uint64_t Rng::next_u64() { return engine_(); }

}  // namespace imagine
