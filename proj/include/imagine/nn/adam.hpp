#pragma once

#include <cstdint>
#include <vector>

#include "imagine/nn/network.hpp"
#include "imagine/nn/tensor.hpp"

namespace imagine::nn {

// β1/β2/ε default to the usual Adam values.
struct AdamConfig {
  float learning_rate = 1e-3F;
  float beta1 = 0.9F;
  float beta2 = 0.999F;
  float epsilon = 1e-8F;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

class Adam {
 public:
  Adam(std::vector<ParamRef> params, AdamConfig config = {});

  // One bias-corrected update from the current gradients. If any gradient is
  // non-finite nothing is modified and NumericError names the offender.
  void step();

  const AdamState& state() const noexcept { return state_; }
  AdamState& state() noexcept { return state_; }
  const std::vector<ParamRef>& params() const noexcept { return params_; }

 private:
  std::vector<ParamRef> params_;
  AdamState state_;
};

}  // namespace imagine::nn
