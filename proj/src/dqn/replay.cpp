#include "imagine/dqn/replay.hpp"

#include "imagine/core/binary_io.hpp"

namespace imagine::dqn {

namespace {

constexpr std::uint32_t kRealKind = 0;
constexpr std::uint32_t kImaginaryKind = 1;

void put_flags(ByteWriter& w, bool a, bool b) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>((a ? 1U : 0U) | (b ? 2U : 0U)));
}

template <class T, class PutRecord>
std::vector<std::byte> encode(const ReplayMemory<T>& memory, std::uint32_t kind, PutRecord put_record) {
  ByteWriter w;
  w.magic("RPLY");
  w.put<std::uint32_t>(kReplayVersion);
  w.put<std::uint32_t>(kind);
  w.put<std::uint64_t>(memory.capacity());
  w.put<std::uint64_t>(memory.total_inserted());
  w.put<std::uint64_t>(memory.size());
  for (std::size_t i = 0; i < memory.size(); ++i) put_record(w, memory[i]);
  return std::move(w.bytes());
}

template <class T, class GetRecord>
ReplayMemory<T> decode(std::span<const std::byte> bytes, std::uint32_t kind, GetRecord get_record) {
  ByteReader r(bytes, "replay snapshot");
  r.expect_magic("RPLY");
  if (r.get<std::uint32_t>() != kReplayVersion) throw IoError("replay snapshot: unsupported version");
  if (r.get<std::uint32_t>() != kind) throw IoError("replay snapshot: wrong memory kind");
  const auto capacity = r.get<std::uint64_t>();
  const auto total = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  if (count > capacity) throw IoError("replay snapshot: count exceeds capacity");
  std::vector<T> items;
  items.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) items.push_back(get_record(r));
  if (!r.at_end()) throw IoError("replay snapshot: trailing bytes");
  ReplayMemory<T> memory(capacity);
  memory.restore(std::move(items), total);
  return memory;
}

void put_real(ByteWriter& w, const Transition& t) {
  w.floats(t.mu_t);
  w.floats(t.sigma_t);
  w.put<std::int32_t>(t.action);
  w.floats(t.mu_next);
  w.floats(t.sigma_next);
  w.put<float>(t.reward);
  put_flags(w, t.done_next, t.timeout);
}

Transition get_real(ByteReader& r) {
  Transition t;
  r.floats(t.mu_t);
  r.floats(t.sigma_t);
  t.action = r.get<std::int32_t>();
  r.floats(t.mu_next);
  r.floats(t.sigma_next);
  t.reward = r.get<float>();
  const auto flags = r.get<std::uint8_t>();
  t.done_next = (flags & 1U) != 0;
  t.timeout = (flags & 2U) != 0;
  return t;
}

void put_imagined(ByteWriter& w, const ImaginedTransition& t) {
  w.floats(t.z_t);
  w.put<std::int32_t>(t.action);
  w.floats(t.z_next);
  w.put<float>(t.reward);
  put_flags(w, t.done, false);
}

ImaginedTransition get_imagined(ByteReader& r) {
  ImaginedTransition t;
  r.floats(t.z_t);
  t.action = r.get<std::int32_t>();
  r.floats(t.z_next);
  t.reward = r.get<float>();
  t.done = (r.get<std::uint8_t>() & 1U) != 0;
  return t;
}

}  // namespace

std::vector<std::byte> encode_memory(const RealMemory& memory) { return encode(memory, kRealKind, put_real); }

std::vector<std::byte> encode_memory(const ImaginaryMemory& memory) {
  return encode(memory, kImaginaryKind, put_imagined);
}

RealMemory decode_real_memory(std::span<const std::byte> bytes) {
  return decode<Transition>(bytes, kRealKind, get_real);
}

ImaginaryMemory decode_imaginary_memory(std::span<const std::byte> bytes) {
  return decode<ImaginedTransition>(bytes, kImaginaryKind, get_imagined);
}

void write_memory(const std::filesystem::path& path, const RealMemory& memory) {
  write_file_bytes(path, encode_memory(memory));
}

void write_memory(const std::filesystem::path& path, const ImaginaryMemory& memory) {
  write_file_bytes(path, encode_memory(memory));
}

RealMemory read_real_memory(const std::filesystem::path& path) { return decode_real_memory(read_file_bytes(path)); }

ImaginaryMemory read_imaginary_memory(const std::filesystem::path& path) {
  return decode_imaginary_memory(read_file_bytes(path));
}

}  // namespace imagine::dqn
