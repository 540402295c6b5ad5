#include "imagine/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "imagine/core/errors.hpp"

namespace imagine::nn {

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ConfigError("tensor shape product " + std::to_string(shape_product(shape_)) +
                      " does not match data length " + std::to_string(data_.size()));
  }
}

Tensor Tensor::row_vector(std::span<const float> values) {
  return Tensor({1, values.size()}, std::vector<float>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(std::vector<std::size_t> shape) {
  if (shape_product(shape) != data_.size()) throw ConfigError("reshape changes element count");
  shape_ = std::move(shape);
}

void Tensor::resize(std::size_t rows, std::size_t cols) {
  shape_ = {rows, cols};
  data_.resize(rows * cols);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace imagine::nn
