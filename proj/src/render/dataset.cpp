#include "imagine/render/dataset.hpp"

#include <string>

#include "imagine/core/binary_io.hpp"
#include "imagine/core/errors.hpp"

namespace imagine::render {

Observation ImageSet::observation(std::size_t i) const {
  Observation obs;
  const auto img = image(i);
  std::copy(img.begin(), img.end(), obs.pixels.begin());
  return obs;
}

void ImageSet::push_back(const Observation& obs, const env::Macrostate& s) {
  pixels.insert(pixels.end(), obs.pixels.begin(), obs.pixels.end());
  states.push_back(static_cast<std::uint8_t>(s.index()));
}

namespace {

ImageSet build_split(std::size_t n, const FragmentPool& pool, Rng rng) {
  ImageSet set;
  set.pixels.reserve(n * kPixels);
  set.states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = env::Macrostate::from_index(static_cast<int>(rng.index(env::kNumStates)));
    set.push_back(render(s, pool, rng), s);
  }
  return set;
}

}  // namespace

Dataset build_dataset(std::size_t n_train, std::size_t n_test, const FragmentPool& pool, const Rng& rng) {
  if (n_train == 0 || n_test == 0) throw ConfigError("dataset sizes must be at least 1");
  return Dataset{build_split(n_train, pool, rng.fork(1)), build_split(n_test, pool, rng.fork(2))};
}

std::vector<std::byte> encode_image_set(const ImageSet& set) {
  ByteWriter w;
  w.magic("OBSD");
  w.put<std::uint32_t>(kDatasetVersion);
  w.put<std::uint64_t>(set.size());
  w.put<std::uint32_t>(kChannels);
  w.put<std::uint32_t>(kHeight);
  w.put<std::uint32_t>(kWidth);
  w.floats(set.pixels);
  w.raw(set.states.data(), set.states.size());
  return std::move(w.bytes());
}

ImageSet decode_image_set(std::span<const std::byte> bytes) {
  ByteReader r(bytes, "dataset");
  r.expect_magic("OBSD");
  if (const auto v = r.get<std::uint32_t>(); v != kDatasetVersion) {
    throw IoError("dataset: unsupported version " + std::to_string(v));
  }
  const auto count = r.get<std::uint64_t>();
  const auto c = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  if (c != kChannels || h != kHeight || w != kWidth) throw IoError("dataset: unexpected image dimensions");
  if (count > r.remaining() / (kPixels * sizeof(float) + 1)) throw IoError("dataset: truncated");
  ImageSet set;
  set.pixels.resize(count * kPixels);
  set.states.resize(count);
  r.floats(set.pixels);
  r.raw(set.states.data(), set.states.size());
  for (auto s : set.states) {
    if (s >= env::kNumStates) throw IoError("dataset: macrostate index out of range");
  }
  return set;
}

void write_image_set(const std::filesystem::path& path, const ImageSet& set) {
  write_file_bytes(path, encode_image_set(set));
}

ImageSet read_image_set(const std::filesystem::path& path) { return decode_image_set(read_file_bytes(path)); }

}  // namespace imagine::render
