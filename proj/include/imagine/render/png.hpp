#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imagine/render/render.hpp"

namespace imagine::render {

// 8-bit grayscale PNG.
std::vector<std::byte> encode_png_gray(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels);
void write_png_gray(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    std::span<const std::uint8_t> pixels);

// Observations laid out left to right, each as its three strips stacked into a
// 72 x 64 tile, separated by a 2-pixel gap.
void write_observation_png(const std::filesystem::path& path, std::span<const Observation> frames);

}  // namespace imagine::render
