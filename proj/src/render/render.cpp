#include "imagine/render/render.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imagine/core/errors.hpp"

namespace imagine::render {

namespace {

using env::Direction;

// Arrow drawn about this point of the strip; pointer wedge about kPointerCenter.
constexpr float kArrowCenterX = 38.0F;
constexpr float kArrowCenterY = 12.0F;
constexpr float kPointerCenterX = 6.0F;
constexpr float kPointerCenterY = 12.0F;
constexpr int kSuperSample = 3;

// Twice the signed area of (a, b, p).
float edge(float ax, float ay, float bx, float by, float px, float py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

bool in_triangle(float px, float py, float ax, float ay, float bx, float by, float cx, float cy) {
  const float e0 = edge(ax, ay, bx, by, px, py);
  const float e1 = edge(bx, by, cx, cy, px, py);
  const float e2 = edge(cx, cy, ax, ay, px, py);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

// Up-pointing arrow in glyph coordinates (y grows downward): triangular head
// plus a tail bar.
bool in_up_arrow(float x, float y) {
  if (in_triangle(x, y, 0.0F, -8.0F, -6.0F, -2.0F, 6.0F, -2.0F)) return true;
  return x >= -2.0F && x <= 2.0F && y >= -2.0F && y <= 8.0F;
}

bool in_pointer(float x, float y) { return in_triangle(x, y, -5.0F, -6.0F, -5.0F, 6.0F, 4.0F, 0.0F); }

// Undo `quarter_turns` clockwise screen rotations: (x, y) -> (y, -x) per turn.
void unrotate(float& x, float& y, int quarter_turns) {
  for (int i = 0; i < quarter_turns; ++i) {
    const float nx = y;
    const float ny = -x;
    x = nx;
    y = ny;
  }
}

template <typename Inside>
void rasterize(std::span<float> out, std::size_t width, float cx, float cy, const Jitter& j, Inside inside) {
  const std::size_t height = out.size() / width;
  constexpr float kStep = 1.0F / kSuperSample;
  constexpr float kWeight = 1.0F / (kSuperSample * kSuperSample);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      float coverage = 0.0F;
      for (int sy = 0; sy < kSuperSample; ++sy) {
        for (int sx = 0; sx < kSuperSample; ++sx) {
          const float px = static_cast<float>(c) + (static_cast<float>(sx) + 0.5F) * kStep;
          const float py = static_cast<float>(r) + (static_cast<float>(sy) + 0.5F) * kStep;
          const float gx = (px - cx - j.dx) / j.scale;
          const float gy = (py - cy - j.dy) / j.scale;
          if (inside(gx, gy)) coverage += kWeight;
        }
      }
      out[r * width + c] = kBackground + (kForeground - kBackground) * coverage;
    }
  }
}

Jitter draw_jitter(Rng& rng) {
  return Jitter{rng.uniform(-kMaxOffset, kMaxOffset), rng.uniform(-kMaxOffset, kMaxOffset),
                rng.uniform(1.0F - kMaxScaleJitter, 1.0F + kMaxScaleJitter)};
}

void add_noise(std::span<float> raster, Rng& rng) {
  for (float& v : raster) v = std::clamp(v + kNoiseSigma * rng.normal(), 0.0F, 1.0F);
}

// ---- classification oracle ----

constexpr int kSearchShift = 3;
constexpr std::size_t kArrowWindowX0 = 24;
constexpr std::size_t kArrowWindowX1 = 54;
constexpr std::size_t kArrowWindowW = kArrowWindowX1 - kArrowWindowX0;
constexpr std::size_t kShiftCount = (2 * kSearchShift + 1) * (2 * kSearchShift + 1);
constexpr float kMinArrowScore = 0.6F;
constexpr float kMinArrowMargin = 0.05F;
// Exactly one strip carries the pointer: take the best strip, require it to clear
// the bar and beat the runner-up by a clear margin.
constexpr float kPointerPresent = 0.6F;
constexpr float kMinPointerMargin = 0.25F;

// Zero-mean, unit-norm template.
struct Template {
  std::vector<float> values;
};

Template normalize(std::vector<float> v) {
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double norm = 0.0;
  for (float& x : v) {
    x = static_cast<float>(x - mean);
    norm += static_cast<double>(x) * x;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-6) {
    std::fill(v.begin(), v.end(), 0.0F);  // flat region matches nothing
  } else {
    for (float& x : v) x = static_cast<float>(x / norm);
  }
  return {std::move(v)};
}

struct Templates {
  // [direction][shift] over the arrow window, and [shift] over the pointer patch.
  std::vector<std::vector<Template>> arrow;
  std::vector<Template> pointer;

  Templates() {
    arrow.resize(env::kNumDirections);
    std::vector<float> strip(kStripPixels);
    for (int d = 0; d < env::kNumDirections; ++d) {
      for (int dy = -kSearchShift; dy <= kSearchShift; ++dy) {
        for (int dx = -kSearchShift; dx <= kSearchShift; ++dx) {
          rasterize_arrow(static_cast<Direction>(d), Jitter{static_cast<float>(dx), static_cast<float>(dy), 1.0F},
                          strip);
          std::vector<float> window;
          window.reserve(kHeight * kArrowWindowW);
          for (std::size_t r = 0; r < kHeight; ++r) {
            for (std::size_t c = kArrowWindowX0; c < kArrowWindowX1; ++c) window.push_back(strip[r * kWidth + c]);
          }
          arrow[static_cast<std::size_t>(d)].push_back(normalize(std::move(window)));
        }
      }
    }
    std::vector<float> patch(kHeight * kPointerColumns);
    for (int dy = -kSearchShift; dy <= kSearchShift; ++dy) {
      for (int dx = -kSearchShift; dx <= kSearchShift; ++dx) {
        rasterize_pointer(Jitter{static_cast<float>(dx), static_cast<float>(dy), 1.0F}, patch);
        pointer.push_back(normalize(patch));
      }
    }
  }
};

const Templates& templates() {
  static const Templates t;
  return t;
}

// Max NCC of `region` (already zero-mean/unit-norm) over a template family.
float best_score(const Template& region, const std::vector<Template>& family) {
  float best = -1.0F;
  for (const auto& t : family) {
    float dot = 0.0F;
    for (std::size_t i = 0; i < t.values.size(); ++i) dot += region.values[i] * t.values[i];
    best = std::max(best, dot);
  }
  return best;
}

Template extract(const Observation& obs, std::size_t channel, std::size_t x0, std::size_t x1) {
  std::vector<float> v;
  v.reserve(kHeight * (x1 - x0));
  for (std::size_t r = 0; r < kHeight; ++r) {
    for (std::size_t c = x0; c < x1; ++c) v.push_back(obs.at(channel, r, c));
  }
  return normalize(std::move(v));
}

}  // namespace

void rasterize_arrow(Direction dir, const Jitter& jitter, std::span<float> strip) {
  const int turns = static_cast<int>(dir);
  rasterize(strip, kWidth, kArrowCenterX, kArrowCenterY, jitter, [turns](float x, float y) {
    unrotate(x, y, turns);
    return in_up_arrow(x, y);
  });
}

void rasterize_pointer(const Jitter& jitter, std::span<float> patch) {
  rasterize(patch, kPointerColumns, kPointerCenterX, kPointerCenterY, jitter, in_pointer);
}

FragmentPool::FragmentPool(std::uint64_t seed)
    : seed_(seed),
      arrows_(env::kNumCubes * env::kNumDirections * kArrowVariants * kStripPixels),
      pointers_(env::kNumCubes * kPointerVariants * kHeight * kPointerColumns),
      arrow_jitter_(env::kNumCubes * env::kNumDirections * kArrowVariants),
      pointer_jitter_(env::kNumCubes * kPointerVariants) {
  const Rng root(seed);
  for (std::size_t cube = 0; cube < env::kNumCubes; ++cube) {
    for (int d = 0; d < env::kNumDirections; ++d) {
      for (std::size_t v = 0; v < kArrowVariants; ++v) {
        const std::size_t slot = arrow_slot(cube, static_cast<Direction>(d), v);
        Rng rng = root.fork(1000 + slot);
        arrow_jitter_[slot] = draw_jitter(rng);
        std::span<float> raster(arrows_.data() + slot * kStripPixels, kStripPixels);
        rasterize_arrow(static_cast<Direction>(d), arrow_jitter_[slot], raster);
        add_noise(raster, rng);
      }
    }
    for (std::size_t v = 0; v < kPointerVariants; ++v) {
      const std::size_t slot = cube * kPointerVariants + v;
      Rng rng = root.fork(100000 + slot);
      pointer_jitter_[slot] = draw_jitter(rng);
      std::span<float> raster(pointers_.data() + slot * kHeight * kPointerColumns, kHeight * kPointerColumns);
      rasterize_pointer(pointer_jitter_[slot], raster);
      add_noise(raster, rng);
    }
  }
}

std::size_t FragmentPool::arrow_slot(std::size_t cube, Direction dir, std::size_t variant) {
  return (cube * env::kNumDirections + static_cast<std::size_t>(dir)) * kArrowVariants + variant;
}

std::span<const float> FragmentPool::arrow_fragment(std::size_t cube, Direction dir, std::size_t variant) const {
  return {arrows_.data() + arrow_slot(cube, dir, variant) * kStripPixels, kStripPixels};
}

std::span<const float> FragmentPool::pointer_fragment(std::size_t cube, std::size_t variant) const {
  const std::size_t n = kHeight * kPointerColumns;
  return {pointers_.data() + (cube * kPointerVariants + variant) * n, n};
}

const Jitter& FragmentPool::arrow_jitter(std::size_t cube, Direction dir, std::size_t variant) const {
  return arrow_jitter_[arrow_slot(cube, dir, variant)];
}

const Jitter& FragmentPool::pointer_jitter(std::size_t cube, std::size_t variant) const {
  return pointer_jitter_[cube * kPointerVariants + variant];
}

Observation compose(const env::Macrostate& state, const FragmentPool& pool,
                    const std::array<std::size_t, 3>& arrow_variant, std::size_t pointer_variant) {
  Observation obs;
  for (std::size_t c = 0; c < kChannels; ++c) {
    const auto frag = pool.arrow_fragment(c, state.arrows[c], arrow_variant[c]);
    std::copy(frag.begin(), frag.end(), obs.pixels.begin() + static_cast<std::ptrdiff_t>(c * kStripPixels));
  }
  const std::size_t p = state.pointed;
  const auto patch = pool.pointer_fragment(p, pointer_variant);
  for (std::size_t r = 0; r < kHeight; ++r) {
    for (std::size_t c = 0; c < kPointerColumns; ++c) obs.at(p, r, c) = patch[r * kPointerColumns + c];
  }
  return obs;
}

Observation render(const env::Macrostate& state, const FragmentPool& pool, Rng& rng) {
  std::array<std::size_t, 3> variants{};
  for (auto& v : variants) v = rng.index(kArrowVariants);
  const std::size_t pointer = rng.index(kPointerVariants);
  return compose(state, pool, variants, pointer);
}

std::optional<env::Macrostate> try_classify_observation(const Observation& obs) {
  const auto& t = templates();
  env::Macrostate state;
  int pointed = -1;
  float pointer_best = -2.0F;
  float pointer_second = -2.0F;
  for (std::size_t c = 0; c < kChannels; ++c) {
    const Template arrow_region = extract(obs, c, kArrowWindowX0, kArrowWindowX1);
    float best = -2.0F;
    float second = -2.0F;
    int best_dir = -1;
    for (int d = 0; d < env::kNumDirections; ++d) {
      const float s = best_score(arrow_region, t.arrow[static_cast<std::size_t>(d)]);
      if (s > best) {
        second = best;
        best = s;
        best_dir = d;
      } else if (s > second) {
        second = s;
      }
    }
    if (!(best >= kMinArrowScore) || best - second < kMinArrowMargin) return std::nullopt;
    state.arrows[c] = static_cast<Direction>(best_dir);

    const float pointer_score = best_score(extract(obs, c, 0, kPointerColumns), t.pointer);
    if (std::isnan(pointer_score)) return std::nullopt;
    if (pointer_score > pointer_best) {
      pointer_second = pointer_best;
      pointer_best = pointer_score;
      pointed = static_cast<int>(c);
    } else if (pointer_score > pointer_second) {
      pointer_second = pointer_score;
    }
  }
  if (pointed < 0 || pointer_best < kPointerPresent || pointer_best - pointer_second < kMinPointerMargin) {
    return std::nullopt;
  }
  state.pointed = static_cast<std::uint8_t>(pointed);
  return state;
}

env::Macrostate classify_observation(const Observation& obs) {
  auto s = try_classify_observation(obs);
  if (!s) throw AmbiguousObservation("observation does not match any macrostate template unambiguously");
  return *s;
}

}  // namespace imagine::render
