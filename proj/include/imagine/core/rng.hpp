#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace imagine {

// Seeded random stream. Every stochastic component owns its own stream so that
// disabling one consumer (e.g. the world model) never perturbs the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Independent child stream derived from this stream's seed and `stream_id`.
  // Does not advance the parent.
  Rng fork(std::uint64_t stream_id) const;

  std::uint64_t seed() const noexcept { return seed_; }

  float uniform();                        // [0, 1)
  float uniform(float lo, float hi);
  std::size_t index(std::size_t n);       // uniform in [0, n)
  float normal();                         // N(0, 1)
  bool bernoulli(double p);
  std::uint64_t next_u64();

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<float> normal_{0.0F, 1.0F};
};

// Well-known stream identifiers used across the project.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kEnvironment = 2;
inline constexpr std::uint64_t kController = 3;
inline constexpr std::uint64_t kModel = 4;
inline constexpr std::uint64_t kImagination = 5;
inline constexpr std::uint64_t kEvaluation = 6;
inline constexpr std::uint64_t kDataset = 7;
inline constexpr std::uint64_t kVae = 8;
}  // namespace streams

}  // namespace imagine
