#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/nn/tensor.hpp"

namespace imagine::nn {

enum class Activation { Relu, Linear, Softmax, Sigmoid };

enum class Init {
  Auto,  // He-uniform for ReLU layers, Xavier-uniform otherwise
  Zero,
};

struct LayerSpec {
  std::size_t units = 0;
  Activation activation = Activation::Linear;
  float dropout = 0.0F;  // trunk layers only
  Init init = Init::Auto;
  std::string name;      // optional; used in parameter names
};

// A feed-forward trunk followed by one or more parallel output heads that all
// read the trunk output.
struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> trunk;
  std::vector<LayerSpec> heads;
};

struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParameterMap = std::map<std::string, Tensor, std::less<>>;

class DenseLayer {
 public:
  DenseLayer(std::size_t fan_in, LayerSpec spec, Rng& init_rng);

  const LayerSpec& spec() const noexcept { return spec_; }
  std::size_t fan_in() const noexcept { return weight_.cols(); }
  std::size_t fan_out() const noexcept { return weight_.rows(); }

  Tensor& weight() noexcept { return weight_; }
  const Tensor& weight() const noexcept { return weight_; }
  Tensor& bias() noexcept { return bias_; }
  const Tensor& bias() const noexcept { return bias_; }
  Tensor& weight_grad() noexcept { return weight_grad_; }
  Tensor& bias_grad() noexcept { return bias_grad_; }

  // out = activation(in * W^T + b); no dropout.
  void apply(const Tensor& in, Tensor& out) const;

  // Given dL/d(activated output) in `grad` (modified in place into dL/d(pre-activation)),
  // accumulates parameter gradients and optionally writes dL/d(in).
  void backpropagate(const Tensor& in, const Tensor& activated, Tensor& grad, Tensor* in_grad);

 private:
  LayerSpec spec_;
  Tensor weight_;  // [out x in]
  Tensor bias_;    // [out]
  Tensor weight_grad_;
  Tensor bias_grad_;
};

class Network {
 public:
  Network(NetworkSpec spec, Rng& init_rng);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return spec_.input_dim; }
  std::size_t head_count() const noexcept { return heads_.size(); }
  std::size_t head_dim(std::size_t head) const { return heads_.at(head).fan_out(); }

  // Forward pass that records intermediates for backward(). In train mode each
  // trunk unit with dropout rate p is zeroed with probability p and survivors
  // are scaled by 1/(1-p); `rng` is required then. Returns one tensor per head.
  std::vector<Tensor> forward(const Tensor& input, bool train_mode, Rng* rng);

  // Eval-mode inference on the current parameters; records nothing and is safe
  // to call concurrently with other predict() calls.
  std::vector<Tensor> predict(const Tensor& input) const;

  // Accumulates dL/dθ into the parameter gradients. `head_grads[i]` is dL/d(head i
  // output); an empty tensor means the head does not contribute. Consumes the
  // recorded pass. Returns dL/d(input) when `want_input_grad`, otherwise empty.
  Tensor backward(std::span<const Tensor> head_grads, bool want_input_grad = true);

  bool has_recorded_pass() const noexcept { return recorded_; }

  void zero_grad();
  std::vector<ParamRef> parameters();
  std::size_t parameter_count() const;

  std::vector<NamedTensor> export_parameters(std::string_view prefix = {}) const;
  // Throws ConfigError on missing names or shape mismatch.
  void import_parameters(const ParameterMap& params, std::string_view prefix = {});

  std::vector<DenseLayer>& trunk() noexcept { return trunk_; }
  std::vector<DenseLayer>& heads() noexcept { return heads_; }

 private:
  struct TrunkRecord {
    Tensor activated;  // activation output before dropout
    Tensor mask;       // dropout multipliers (empty if no dropout)
    Tensor output;     // what the next layer sees
  };

  NetworkSpec spec_;
  std::vector<DenseLayer> trunk_;
  std::vector<DenseLayer> heads_;

  bool recorded_ = false;
  Tensor recorded_input_;
  std::vector<TrunkRecord> trunk_records_;
  std::vector<Tensor> head_outputs_;
};

void apply_activation(Activation activation, Tensor& x);

// Hash of all parameter bytes, for "did this change?" checks.
std::uint64_t parameter_fingerprint(const Network& net);

}  // namespace imagine::nn
