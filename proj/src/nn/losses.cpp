#include "imagine/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imagine/core/errors.hpp"

namespace imagine::nn {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.size() != b.size() || a.rows() != b.rows()) throw ConfigError(std::string(what) + ": shape mismatch");
}

}  // namespace

double logcosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
  check_same(prediction, target, "mse_loss");
  LossResult out{0.0, Tensor(prediction.shape()), 0};
  const double inv_rows = 1.0 / static_cast<double>(prediction.rows());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - target[i];
    out.value += d * d;
    out.grad[i] = static_cast<float>(2.0 * d * inv_rows);
  }
  out.value *= inv_rows;
  return out;
}

LossResult bce_loss(const Tensor& probability, const Tensor& target) {
  check_same(probability, target, "bce_loss");
  LossResult out{0.0, Tensor(probability.shape()), 0};
  const double inv_rows = 1.0 / static_cast<double>(probability.rows());
  for (std::size_t i = 0; i < probability.size(); ++i) {
    float p = probability[i];
    if (p < kBceEpsilon || p > 1.0F - kBceEpsilon) {
      ++out.saturated;
      p = std::clamp(p, kBceEpsilon, 1.0F - kBceEpsilon);
    }
    const double t = target[i];
    const double pd = p;
    out.value -= t * std::log(pd) + (1.0 - t) * std::log1p(-pd);
    out.grad[i] = static_cast<float>((pd - t) / (pd * (1.0 - pd)) * inv_rows);
  }
  out.value *= inv_rows;
  return out;
}

LossResult logcosh_loss(const Tensor& prediction, const Tensor& target) {
  check_same(prediction, target, "logcosh_loss");
  LossResult out{0.0, Tensor(prediction.shape()), 0};
  const double inv_rows = 1.0 / static_cast<double>(prediction.rows());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - target[i];
    out.value += logcosh(d);
    out.grad[i] = static_cast<float>(std::tanh(d) * inv_rows);
  }
  out.value *= inv_rows;
  return out;
}

LossResult masked_mse_loss(const Tensor& prediction, std::span<const int> action, std::span<const float> target) {
  const std::size_t rows = prediction.rows();
  if (action.size() != rows || target.size() != rows) throw ConfigError("masked_mse_loss: batch size mismatch");
  LossResult out{0.0, Tensor::matrix(rows, prediction.cols()), 0};
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto a = static_cast<std::size_t>(action[r]);
    if (a >= prediction.cols()) throw ConfigError("masked_mse_loss: action index out of range");
    const double d = static_cast<double>(prediction.at(r, a)) - target[r];
    out.value += d * d;
    out.grad.at(r, a) = static_cast<float>(2.0 * d * inv_rows);
  }
  out.value *= inv_rows;
  return out;
}

}  // namespace imagine::nn
