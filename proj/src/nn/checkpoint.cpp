#include "imagine/nn/checkpoint.hpp"

#include "imagine/core/binary_io.hpp"

namespace imagine::nn {

std::vector<std::byte> encode_checkpoint(std::span<const NamedTensor> tensors) {
  ByteWriter w;
  w.magic("NNCK");
  w.put<std::uint32_t>(kCheckpointVersion);
  for (const auto& t : tensors) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.raw(t.name.data(), t.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.tensor.rank()));
    for (std::size_t d : t.tensor.shape()) w.put<std::uint64_t>(d);
    w.floats(t.tensor.values());
  }
  return std::move(w.bytes());
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::byte> bytes) {
  ByteReader r(bytes, "checkpoint");
  r.expect_magic("NNCK");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported format version " + std::to_string(version));
  }
  std::vector<NamedTensor> out;
  while (!r.at_end()) {
    NamedTensor t;
    t.name.resize(r.get<std::uint32_t>());
    r.raw(t.name.data(), t.name.size());
    const auto rank = r.get<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    const std::size_t count = shape_product(shape);
    if (count > r.remaining() / sizeof(float)) throw IoError("checkpoint: truncated payload for '" + t.name + "'");
    t.tensor = Tensor(shape);
    r.floats(t.tensor.values());
    out.push_back(std::move(t));
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  write_file_bytes(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint '" + path.string() + "' does not exist");
  return decode_checkpoint(read_file_bytes(path));
}

ParameterMap to_map(std::vector<NamedTensor> tensors) {
  ParameterMap map;
  for (auto& t : tensors) map.insert_or_assign(std::move(t.name), std::move(t.tensor));
  return map;
}

}  // namespace imagine::nn
