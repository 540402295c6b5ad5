#include "imagine/render/png.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "imagine/core/binary_io.hpp"
#include "imagine/core/errors.hpp"

namespace imagine::render {

namespace {

void put_be32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::byte>((v >> shift) & 0xFF));
}

void put_chunk(std::vector<std::byte>& out, const char* type, const std::vector<std::byte>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_pos = out.size();
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>(type[i]));
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + type_pos),
                         static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::byte> encode_png_gray(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height) throw ConfigError("png: pixel count does not match dimensions");
  std::vector<std::byte> out;
  for (unsigned char b : {0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A}) out.push_back(static_cast<std::byte>(b));

  std::vector<std::byte> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(width));
  put_be32(ihdr, static_cast<std::uint32_t>(height));
  for (std::uint8_t b : {8, 0, 0, 0, 0}) ihdr.push_back(static_cast<std::byte>(b));  // 8-bit gray
  put_chunk(out, "IHDR", ihdr);

  std::vector<Bytef> raw;
  raw.reserve(height * (width + 1));
  for (std::size_t r = 0; r < height; ++r) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(r * width),
               pixels.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION) != Z_OK) {
    throw IoError("png: zlib compression failed");
  }
  std::vector<std::byte> idat(packed_size);
  std::transform(packed.begin(), packed.begin() + static_cast<std::ptrdiff_t>(packed_size), idat.begin(),
                 [](Bytef b) { return static_cast<std::byte>(b); });
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png_gray(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    std::span<const std::uint8_t> pixels) {
  write_file_bytes(path, encode_png_gray(width, height, pixels));
}

void write_observation_png(const std::filesystem::path& path, std::span<const Observation> frames) {
  if (frames.empty()) throw ConfigError("png: no frames to write");
  constexpr std::size_t kGap = 2;
  const std::size_t tile_h = kChannels * kHeight;
  const std::size_t width = frames.size() * kWidth + (frames.size() - 1) * kGap;
  std::vector<std::uint8_t> pixels(width * tile_h, 128);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::size_t x0 = f * (kWidth + kGap);
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t r = 0; r < kHeight; ++r) {
        for (std::size_t c = 0; c < kWidth; ++c) {
          const float v = std::clamp(frames[f].at(ch, r, c), 0.0F, 1.0F);
          pixels[(ch * kHeight + r) * width + x0 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0F));
        }
      }
    }
  }
  write_png_gray(path, width, tile_h, pixels);
}

}  // namespace imagine::render
