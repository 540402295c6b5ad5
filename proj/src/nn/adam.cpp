#include "imagine/nn/adam.hpp"

#include <cmath>
#include <string>

#include "imagine/core/errors.hpp"
#include "imagine/simd/kernels.hpp"

namespace imagine::nn {

Adam::Adam(std::vector<ParamRef> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
  for (const auto& p : params_) {
    if (!p.value->same_shape(*p.grad)) throw ConfigError("adam: gradient shape differs for '" + p.name + "'");
    state_.first_moment.emplace_back(p.value->shape());
    state_.second_moment.emplace_back(p.value->shape());
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    for (std::size_t i = 0; i < p.grad->size(); ++i) {
      if (!std::isfinite((*p.grad)[i])) {
        throw NumericError("adam: non-finite gradient " + std::to_string((*p.grad)[i]) + " in '" + p.name +
                           "' at index " + std::to_string(i) + " (step " + std::to_string(state_.step + 1) +
                           "); update aborted");
      }
    }
  }
  ++state_.step;
  const auto& c = state_.config;
  const double t = static_cast<double>(state_.step);
  const simd::AdamCoefficients coeff{
      c.learning_rate,
      c.beta1,
      c.beta2,
      c.epsilon,
      static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta1), t)),
      static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta2), t)),
  };
  const auto& k = simd::active_kernels();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    k.adam_update(p.value->data(), state_.first_moment[i].data(), state_.second_moment[i].data(), p.grad->data(),
                  p.value->size(), coeff);
  }
}

}  // namespace imagine::nn
