#pragma once

// Real and imaginary replay memories. Snapshots use the "RPLY" container:
//   "RPLY" | u32 version | u32 kind (0 real, 1 imaginary) | u64 capacity
//   | u64 total_inserted | u64 count | fixed-width records, oldest first

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "imagine/core/errors.hpp"
#include "imagine/core/rng.hpp"
#include "imagine/vae/vae.hpp"

namespace imagine::dqn {

using vae::Latent;

struct Transition {
  Latent mu_t{};
  Latent sigma_t{};
  int action = 0;
  Latent mu_next{};
  Latent sigma_next{};
  float reward = 0.0F;
  bool done_next = false;  // goal or illegal only
  bool timeout = false;    // episode cut by the step cap; bootstraps like a neutral step

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct ImaginedTransition {
  Latent z_t{};
  int action = 0;
  Latent z_next{};
  float reward = 0.0F;
  bool done = false;

  friend bool operator==(const ImaginedTransition&, const ImaginedTransition&) = default;
};

inline constexpr std::size_t kRealCapacity = 50'000;
inline constexpr std::size_t kImaginaryCapacity = 3'000;

// Fixed-capacity FIFO ring buffer with uniform sampling over current contents.
template <class T>
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay memory capacity must be positive");
    items_.reserve(capacity < 4096 ? capacity : 4096);
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  std::uint64_t total_inserted() const noexcept { return total_inserted_; }

  void push(const T& item) {
    if (items_.size() < capacity_) {
      items_.push_back(item);
    } else {
      items_[head_] = item;
      head_ = (head_ + 1) % capacity_;
    }
    ++total_inserted_;
  }

  // i = 0 is the oldest item still held.
  const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  // n distinct indices when n <= size(), otherwise n draws with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw UsageError("sampling from an empty replay memory");
    std::vector<std::size_t> out;
    out.reserve(n);
    const std::size_t size = items_.size();
    if (n > size) {
      for (std::size_t i = 0; i < n; ++i) out.push_back(rng.index(size));
      return out;
    }
    // Floyd's algorithm; membership checked linearly since n is small relative to size.
    for (std::size_t j = size - n; j < size; ++j) {
      const std::size_t t = rng.index(j + 1);
      bool seen = false;
      for (std::size_t v : out) {
        if (v == t) {
          seen = true;
          break;
        }
      }
      out.push_back(seen ? j : t);
    }
    return out;
  }

  void clear() noexcept {
    items_.clear();
    head_ = 0;
  }

  // Restores contents in oldest-first order; used by snapshot loading.
  void restore(std::vector<T> oldest_first, std::uint64_t total_inserted) {
    if (oldest_first.size() > capacity_) throw ConfigError("replay snapshot exceeds memory capacity");
    items_ = std::move(oldest_first);
    head_ = 0;
    total_inserted_ = total_inserted;
  }

 private:
  std::size_t capacity_;
  std::vector<T> items_;
  std::size_t head_ = 0;
  std::uint64_t total_inserted_ = 0;
};

using RealMemory = ReplayMemory<Transition>;
using ImaginaryMemory = ReplayMemory<ImaginedTransition>;

inline constexpr std::uint32_t kReplayVersion = 1;

std::vector<std::byte> encode_memory(const RealMemory& memory);
std::vector<std::byte> encode_memory(const ImaginaryMemory& memory);
RealMemory decode_real_memory(std::span<const std::byte> bytes);
ImaginaryMemory decode_imaginary_memory(std::span<const std::byte> bytes);

void write_memory(const std::filesystem::path& path, const RealMemory& memory);
void write_memory(const std::filesystem::path& path, const ImaginaryMemory& memory);
RealMemory read_real_memory(const std::filesystem::path& path);
ImaginaryMemory read_imaginary_memory(const std::filesystem::path& path);

}  // namespace imagine::dqn
