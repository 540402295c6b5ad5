#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/env/puzzle.hpp"

namespace imagine::render {

inline constexpr std::size_t kChannels = 3;  // one strip per cube, cube order
inline constexpr std::size_t kHeight = 24;
inline constexpr std::size_t kWidth = 64;
inline constexpr std::size_t kStripPixels = kHeight * kWidth;
inline constexpr std::size_t kPixels = kChannels * kStripPixels;

// Left-margin columns replaced by the pointing fragment of the pointed cube.
inline constexpr std::size_t kPointerColumns = 14;

inline constexpr std::size_t kArrowVariants = 16;
inline constexpr std::size_t kPointerVariants = 50;

inline constexpr float kBackground = 0.05F;
inline constexpr float kForeground = 0.95F;
inline constexpr float kMaxOffset = 2.0F;
inline constexpr float kMaxScaleJitter = 0.10F;
inline constexpr float kNoiseSigma = 0.02F;

// 3 x 24 x 64 grayscale image in [0, 1], channel-major.
struct Observation {
  std::vector<float> pixels = std::vector<float>(kPixels, 0.0F);

  float& at(std::size_t channel, std::size_t row, std::size_t col) {
    return pixels[channel * kStripPixels + row * kWidth + col];
  }
  float at(std::size_t channel, std::size_t row, std::size_t col) const {
    return pixels[channel * kStripPixels + row * kWidth + col];
  }
  std::span<const float> strip(std::size_t channel) const {
    return {pixels.data() + channel * kStripPixels, kStripPixels};
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Geometric jitter of one fragment.
struct Jitter {
  float dx = 0.0F;
  float dy = 0.0F;
  float scale = 1.0F;
};

// Pools of pre-rendered image fragments: 16 variants per (cube, arrow direction)
// microstate and 50 per pointing microstate. Each variant is fixed by its own
// jitter and noise pattern, so a pool is a pure function of its seed.
class FragmentPool {
 public:
  explicit FragmentPool(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  // 24 x 64 strip raster.
  std::span<const float> arrow_fragment(std::size_t cube, env::Direction dir, std::size_t variant) const;
  // 24 x kPointerColumns raster.
  std::span<const float> pointer_fragment(std::size_t cube, std::size_t variant) const;

  const Jitter& arrow_jitter(std::size_t cube, env::Direction dir, std::size_t variant) const;
  const Jitter& pointer_jitter(std::size_t cube, std::size_t variant) const;

  // Distinct images a single macrostate can produce (16^3 * 50).
  static constexpr std::uint64_t combinations_per_state() {
    return kArrowVariants * kArrowVariants * kArrowVariants * kPointerVariants;
  }

 private:
  static std::size_t arrow_slot(std::size_t cube, env::Direction dir, std::size_t variant);

  std::uint64_t seed_;
  std::vector<float> arrows_;
  std::vector<float> pointers_;
  std::vector<Jitter> arrow_jitter_;
  std::vector<Jitter> pointer_jitter_;
};

// Noise-free glyph rasters, exposed for tests and the classification oracle.
void rasterize_arrow(env::Direction dir, const Jitter& jitter, std::span<float> strip);
void rasterize_pointer(const Jitter& jitter, std::span<float> patch);

// Composites one uniformly chosen fragment per microstate.
Observation render(const env::Macrostate& state, const FragmentPool& pool, Rng& rng);

// Composites explicitly chosen fragments: arrow_variant per cube, one pointer variant.
Observation compose(const env::Macrostate& state, const FragmentPool& pool,
                    const std::array<std::size_t, 3>& arrow_variant, std::size_t pointer_variant);

class AmbiguousObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Recovers the generating macrostate by normalized cross-correlation against
// canonical glyph templates over a +-3 px shift window. Throws
// AmbiguousObservation when no clear match exists (e.g. pure noise).
env::Macrostate classify_observation(const Observation& obs);
std::optional<env::Macrostate> try_classify_observation(const Observation& obs);

}  // namespace imagine::render
