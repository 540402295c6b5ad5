#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace imagine::nn {

// Dense row-major float tensor. Rank-2 tensors are [rows x cols]; most of the
// toolkit works on [batch x features] matrices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, float fill = 0.0F);
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, float fill = 0.0F) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor row_vector(std::span<const float> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rank-2 view: rank-1 tensors are a single row.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  float& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  float at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

  void fill(float value);
  // Reshape in place keeping storage; product of dims must equal size().
  void reshape(std::vector<std::size_t> shape);
  // Resize to [rows x cols]; contents unspecified afterwards.
  void resize(std::size_t rows, std::size_t cols);

  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept;

}  // namespace imagine::nn
