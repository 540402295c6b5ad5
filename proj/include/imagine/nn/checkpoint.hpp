#pragma once

// Flat binary parameter container:
//   "NNCK" | u32 version | records...
//   record = u32 name_len | name (UTF-8) | u32 rank | u64 dims[rank] | f32 payload (little-endian)
// Records run to end of file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imagine/nn/network.hpp"

namespace imagine::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::byte> bytes);

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

ParameterMap to_map(std::vector<NamedTensor> tensors);

}  // namespace imagine::nn
