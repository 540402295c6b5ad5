#pragma once

// Image datasets and their "OBSD" container:
//   "OBSD" | u32 version | u64 count | u32 channels | u32 height | u32 width
//   | f32 pixels[count * 3 * 24 * 64] | u8 macrostate index[count]

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/env/puzzle.hpp"
#include "imagine/render/render.hpp"

namespace imagine::render {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct ImageSet {
  std::vector<float> pixels;          // count x kPixels
  std::vector<std::uint8_t> states;   // macrostate index per image

  std::size_t size() const noexcept { return states.size(); }
  std::span<const float> image(std::size_t i) const { return {pixels.data() + i * kPixels, kPixels}; }
  Observation observation(std::size_t i) const;
  env::Macrostate state(std::size_t i) const { return env::Macrostate::from_index(states[i]); }
  void push_back(const Observation& obs, const env::Macrostate& s);

  friend bool operator==(const ImageSet&, const ImageSet&) = default;
};

struct Dataset {
  ImageSet train;
  ImageSet test;
};

// Macrostates drawn uniformly over all 192; train and test use disjoint streams forked from `rng`.
Dataset build_dataset(std::size_t n_train, std::size_t n_test, const FragmentPool& pool, const Rng& rng);

std::vector<std::byte> encode_image_set(const ImageSet& set);
ImageSet decode_image_set(std::span<const std::byte> bytes);
void write_image_set(const std::filesystem::path& path, const ImageSet& set);
ImageSet read_image_set(const std::filesystem::path& path);

}  // namespace imagine::render
