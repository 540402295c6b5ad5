#include "imagine/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "imagine/core/errors.hpp"
#include "imagine/simd/kernels.hpp"

namespace imagine::nn {

namespace {

using simd::GemmArgs;
using simd::Transpose;

float init_limit(const LayerSpec& spec, std::size_t fan_in) {
  if (spec.activation == Activation::Relu) return std::sqrt(6.0F / static_cast<float>(fan_in));
  return std::sqrt(6.0F / static_cast<float>(fan_in + spec.units));
}

void softmax_rows(Tensor& x) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const float peak = *std::max_element(row.begin(), row.end());
    float total = 0.0F;
    for (float& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (float& v : row) v /= total;
  }
}

std::string param_name(std::string_view prefix, std::string_view group, std::size_t index, const LayerSpec& spec,
                       std::string_view leaf) {
  std::string name(prefix);
  if (!spec.name.empty()) {
    name += spec.name;
  } else {
    name += group;
    name += '.';
    name += std::to_string(index);
  }
  name += '.';
  name += leaf;
  return name;
}

}  // namespace

void apply_activation(Activation activation, Tensor& x) {
  switch (activation) {
    case Activation::Relu:
      simd::active_kernels().relu(x.data(), x.size());
      break;
    case Activation::Linear:
      break;
    case Activation::Softmax:
      softmax_rows(x);
      break;
    case Activation::Sigmoid:
      for (float& v : x.values()) v = 1.0F / (1.0F + std::exp(-v));
      break;
  }
}

DenseLayer::DenseLayer(std::size_t fan_in, LayerSpec spec, Rng& init_rng)
    : spec_(std::move(spec)),
      weight_(Tensor::matrix(spec_.units, fan_in)),
      bias_(Tensor({spec_.units})),
      weight_grad_(Tensor::matrix(spec_.units, fan_in)),
      bias_grad_(Tensor({spec_.units})) {
  if (fan_in == 0 || spec_.units == 0) throw ConfigError("dense layer needs non-zero fan-in and units");
  if (spec_.dropout < 0.0F || spec_.dropout >= 1.0F) throw ConfigError("dropout rate must lie in [0, 1)");
  if (spec_.init == Init::Auto) {
    const float limit = init_limit(spec_, fan_in);
    for (float& w : weight_.values()) w = init_rng.uniform(-limit, limit);
  }
}

void DenseLayer::apply(const Tensor& in, Tensor& out) const {
  if (in.cols() != fan_in()) {
    throw ConfigError("layer expects " + std::to_string(fan_in()) + " inputs, got " + std::to_string(in.cols()));
  }
  const std::size_t batch = in.rows();
  out.resize(batch, fan_out());
  const auto& k = simd::active_kernels();
  k.gemm(GemmArgs{Transpose::No, Transpose::Yes, batch, fan_out(), fan_in(), in.data(), fan_in(), weight_.data(),
                  fan_in(), out.data(), fan_out(), false});
  k.add_row_bias(out.data(), batch, fan_out(), bias_.data());
  apply_activation(spec_.activation, out);
}

void DenseLayer::backpropagate(const Tensor& in, const Tensor& activated, Tensor& grad, Tensor* in_grad) {
  const auto& k = simd::active_kernels();
  const std::size_t batch = in.rows();
  switch (spec_.activation) {
    case Activation::Relu:
      k.relu_backward(grad.data(), activated.data(), grad.size());
      break;
    case Activation::Linear:
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= activated[i] * (1.0F - activated[i]);
      break;
    case Activation::Softmax:
      for (std::size_t r = 0; r < batch; ++r) {
        auto g = grad.row(r);
        auto y = activated.row(r);
        float dot = 0.0F;
        for (std::size_t j = 0; j < g.size(); ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = y[j] * (g[j] - dot);
      }
      break;
  }
  // dW += g^T * in ; db += colsum(g)
  k.gemm(GemmArgs{Transpose::Yes, Transpose::No, fan_out(), fan_in(), batch, grad.data(), fan_out(), in.data(),
                  fan_in(), weight_grad_.data(), fan_in(), true});
  k.column_sums(grad.data(), batch, fan_out(), bias_grad_.data(), true);
  if (in_grad != nullptr) {
    in_grad->resize(batch, fan_in());
    k.gemm(GemmArgs{Transpose::No, Transpose::No, batch, fan_in(), fan_out(), grad.data(), fan_out(), weight_.data(),
                    fan_in(), in_grad->data(), fan_in(), false});
  }
}

Network::Network(NetworkSpec spec, Rng& init_rng) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0) throw ConfigError("network input dimension must be positive");
  if (spec_.heads.empty()) throw ConfigError("network needs at least one output head");
  std::size_t width = spec_.input_dim;
  for (const auto& layer : spec_.trunk) {
    trunk_.emplace_back(width, layer, init_rng);
    width = layer.units;
  }
  for (auto head : spec_.heads) {
    head.dropout = 0.0F;
    heads_.emplace_back(width, head, init_rng);
  }
}

std::vector<Tensor> Network::forward(const Tensor& input, bool train_mode, Rng* rng) {
  if (input.cols() != spec_.input_dim) {
    throw ConfigError("network expects input width " + std::to_string(spec_.input_dim) + ", got " +
                      std::to_string(input.cols()));
  }
  recorded_input_ = input;
  if (recorded_input_.rank() != 2) recorded_input_.reshape({input.rows(), input.cols()});
  trunk_records_.resize(trunk_.size());
  const Tensor* current = &recorded_input_;
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    auto& rec = trunk_records_[i];
    trunk_[i].apply(*current, rec.activated);
    const float p = trunk_[i].spec().dropout;
    if (train_mode && p > 0.0F) {
      if (rng == nullptr) throw UsageError("train-mode forward with dropout needs an rng");
      rec.mask.resize(rec.activated.rows(), rec.activated.cols());
      const float keep_scale = 1.0F / (1.0F - p);
      for (float& m : rec.mask.values()) m = rng->uniform() < p ? 0.0F : keep_scale;
      rec.output = rec.activated;
      simd::active_kernels().multiply(rec.output.data(), rec.mask.data(), rec.output.size());
    } else {
      rec.mask = Tensor();
      rec.output = rec.activated;
    }
    current = &rec.output;
  }
  head_outputs_.resize(heads_.size());
  for (std::size_t h = 0; h < heads_.size(); ++h) heads_[h].apply(*current, head_outputs_[h]);
  recorded_ = true;
  return head_outputs_;
}

std::vector<Tensor> Network::predict(const Tensor& input) const {
  if (input.cols() != spec_.input_dim) {
    throw ConfigError("network expects input width " + std::to_string(spec_.input_dim) + ", got " +
                      std::to_string(input.cols()));
  }
  Tensor a = input;
  if (a.rank() != 2) a.reshape({input.rows(), input.cols()});
  Tensor b;
  for (const auto& layer : trunk_) {
    layer.apply(a, b);
    std::swap(a, b);
  }
  std::vector<Tensor> out(heads_.size());
  for (std::size_t h = 0; h < heads_.size(); ++h) heads_[h].apply(a, out[h]);
  return out;
}

Tensor Network::backward(std::span<const Tensor> head_grads, bool want_input_grad) {
  if (!recorded_) throw UsageError("backward() called without a recorded forward pass");
  if (head_grads.size() != heads_.size()) throw UsageError("backward() needs one gradient slot per head");
  recorded_ = false;

  const Tensor& trunk_out = trunk_.empty() ? recorded_input_ : trunk_records_.back().output;
  Tensor grad = Tensor::matrix(trunk_out.rows(), trunk_out.cols());
  Tensor scratch;
  bool any = false;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    if (head_grads[h].empty()) continue;
    if (head_grads[h].rows() != head_outputs_[h].rows() || head_grads[h].cols() != head_outputs_[h].cols()) {
      throw UsageError("head gradient shape does not match head output");
    }
    Tensor g = head_grads[h];
    if (g.rank() != 2) g.reshape({head_outputs_[h].rows(), head_outputs_[h].cols()});
    heads_[h].backpropagate(trunk_out, head_outputs_[h], g, &scratch);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += scratch[i];
    any = true;
  }
  if (!any) return {};

  for (std::size_t i = trunk_.size(); i-- > 0;) {
    auto& rec = trunk_records_[i];
    if (!rec.mask.empty()) simd::active_kernels().multiply(grad.data(), rec.mask.data(), grad.size());
    const Tensor& in = i == 0 ? recorded_input_ : trunk_records_[i - 1].output;
    const bool need_in = i > 0 || want_input_grad;
    trunk_[i].backpropagate(in, rec.activated, grad, need_in ? &scratch : nullptr);
    if (!need_in) return {};
    std::swap(grad, scratch);
  }
  return grad;
}

void Network::zero_grad() {
  for (auto* group : {&trunk_, &heads_}) {
    for (auto& layer : *group) {
      layer.weight_grad().fill(0.0F);
      layer.bias_grad().fill(0.0F);
    }
  }
}

std::vector<ParamRef> Network::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    out.push_back({param_name("", "trunk", i, trunk_[i].spec(), "weight"), &trunk_[i].weight(), &trunk_[i].weight_grad()});
    out.push_back({param_name("", "trunk", i, trunk_[i].spec(), "bias"), &trunk_[i].bias(), &trunk_[i].bias_grad()});
  }
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    out.push_back({param_name("", "head", h, heads_[h].spec(), "weight"), &heads_[h].weight(), &heads_[h].weight_grad()});
    out.push_back({param_name("", "head", h, heads_[h].spec(), "bias"), &heads_[h].bias(), &heads_[h].bias_grad()});
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* group : {&trunk_, &heads_}) {
    for (const auto& layer : *group) n += layer.weight().size() + layer.bias().size();
  }
  return n;
}

std::vector<NamedTensor> Network::export_parameters(std::string_view prefix) const {
  std::vector<NamedTensor> out;
  auto emit = [&](std::string_view group, const std::vector<DenseLayer>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out.push_back({param_name(prefix, group, i, layers[i].spec(), "weight"), layers[i].weight()});
      out.push_back({param_name(prefix, group, i, layers[i].spec(), "bias"), layers[i].bias()});
    }
  };
  emit("trunk", trunk_);
  emit("head", heads_);
  return out;
}

void Network::import_parameters(const ParameterMap& params, std::string_view prefix) {
  auto load = [&](std::string_view group, std::vector<DenseLayer>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (auto [leaf, target] : {std::pair<std::string_view, Tensor*>{"weight", &layers[i].weight()},
                                  std::pair<std::string_view, Tensor*>{"bias", &layers[i].bias()}}) {
        const std::string name = param_name(prefix, group, i, layers[i].spec(), leaf);
        auto it = params.find(name);
        if (it == params.end()) throw ConfigError("checkpoint lacks parameter '" + name + "'");
        if (it->second.size() != target->size() || it->second.rows() != target->rows()) {
          throw ConfigError("checkpoint parameter '" + name + "' has the wrong shape");
        }
        std::copy(it->second.values().begin(), it->second.values().end(), target->values().begin());
      }
    }
  };
  load("trunk", trunk_);
  load("head", heads_);
  recorded_ = false;
}

std::uint64_t parameter_fingerprint(const Network& net) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const auto& p : net.export_parameters()) {
    for (char c : p.name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.tensor.data());
    for (std::size_t i = 0; i < p.tensor.size() * sizeof(float); ++i) h = (h ^ bytes[i]) * 1099511628211ULL;
  }
  return h;
}

}  // namespace imagine::nn
