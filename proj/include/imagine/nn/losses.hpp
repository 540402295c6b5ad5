#pragma once

#include <cstddef>
#include <span>

#include "imagine/nn/tensor.hpp"

namespace imagine::nn {

// Loss value plus dL/d(prediction). Unless stated otherwise, losses are summed
// over the columns of a row and averaged over rows (the batch).
struct LossResult {
  double value = 0.0;
  Tensor grad;
  std::size_t saturated = 0;  // BCE only: predictions clamped away from {0, 1}
};

LossResult mse_loss(const Tensor& prediction, const Tensor& target);

// Predictions are probabilities (sigmoid outputs); clamped to [kBceEpsilon, 1 - kBceEpsilon].
inline constexpr float kBceEpsilon = 1e-7F;
LossResult bce_loss(const Tensor& probability, const Tensor& target);

LossResult logcosh_loss(const Tensor& prediction, const Tensor& target);

// Mean over rows of (prediction[r, action[r]] - target[r])^2; other outputs get zero gradient.
LossResult masked_mse_loss(const Tensor& prediction, std::span<const int> action, std::span<const float> target);

// Numerically stable log(cosh(x)).
double logcosh(double x);

}  // namespace imagine::nn
