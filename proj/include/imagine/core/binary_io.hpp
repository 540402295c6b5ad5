#pragma once

// Little-endian byte buffers shared by the checkpoint and dataset containers.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "imagine/core/errors.hpp"

namespace imagine {

template <typename T>
T to_little_endian(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return value;
  }
}

class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void magic(std::string_view tag) { raw(tag.data(), tag.size()); }
  template <typename T>
  void put(T value) {
    value = to_little_endian(value);
    raw(&value, sizeof(T));
  }
  void floats(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(values.data(), values.size_bytes());
    } else {
      for (float v : values) put(v);
    }
  }
  std::vector<std::byte>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes, std::string context = "stream")
      : bytes_(bytes), context_(std::move(context)) {}

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    raw(got.data(), got.size());
    if (got != tag) throw IoError(context_ + ": bad magic, expected '" + std::string(tag) + "'");
  }
  template <typename T>
  T get() {
    T value;
    raw(&value, sizeof(T));
    return to_little_endian(value);
  }
  void floats(std::span<float> out) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(out.data(), out.size_bytes());
    } else {
      for (float& v : out) v = get<float>();
    }
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw IoError(context_ + ": truncated data");
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
// Writes via a temporary sibling and rename, so readers never see partial files.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace imagine
