#pragma once

// Randomized gradient trials: small nets (at most 3 layers, at most 16 units),
// analytic gradients from the library against the double-precision oracle.

#include <string>

#include "imagine/core/rng.hpp"
#include "imagine/nn/losses.hpp"
#include "imagine/nn/network.hpp"
#include "imagine/vae/vae.hpp"
#include "imagine/world/world_model.hpp"
#include "support/reference.hpp"

namespace gradsuite {

using imagine::Rng;
using imagine::nn::Activation;
using imagine::nn::Network;
using imagine::nn::NetworkSpec;
using imagine::nn::Tensor;

inline std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.index(hi - lo + 1); }

inline Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols, float lo, float hi) {
  Tensor t = Tensor::matrix(rows, cols);
  for (float& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// 1-3 layers in total: up to two ReLU trunk layers plus one head.
inline NetworkSpec random_spec(Rng& rng, std::size_t outputs, Activation head) {
  NetworkSpec spec;
  spec.input_dim = between(rng, 2, 6);
  const std::size_t depth = between(rng, 0, 2);
  for (std::size_t i = 0; i < depth; ++i) spec.trunk.push_back({between(rng, 2, 16), Activation::Relu});
  spec.heads.push_back({outputs, head});
  return spec;
}

// Biases start at zero, which can leave a ReLU unit fed only by dead units sitting
// exactly on its kink. Random biases keep trials at differentiable points.
inline void randomize_biases(Network& net, Rng& rng) {
  for (auto* layers : {&net.trunk(), &net.heads()}) {
    for (auto& layer : *layers) {
      for (float& b : layer.bias().values()) b = rng.uniform(-0.2F, 0.2F);
    }
  }
}

enum class Loss { Mse, Bce, Logcosh };

inline ref::GradCheck loss_trial(Loss kind, Rng& rng) {
  const std::size_t outputs = between(rng, 1, 4);
  const Activation head = kind == Loss::Bce ? Activation::Sigmoid : Activation::Linear;
  Network net(random_spec(rng, outputs, head), rng);
  randomize_biases(net, rng);
  const std::size_t batch = between(rng, 1, 4);
  const Tensor x = random_matrix(rng, batch, net.input_dim(), -1.0F, 1.0F);
  const Tensor target = kind == Loss::Bce ? random_matrix(rng, batch, outputs, 0.0F, 1.0F)
                                          : random_matrix(rng, batch, outputs, -2.0F, 2.0F);
  const auto out = net.forward(x, true, nullptr);
  auto loss = kind == Loss::Mse   ? imagine::nn::mse_loss(out[0], target)
              : kind == Loss::Bce ? imagine::nn::bce_loss(out[0], target)
                                  : imagine::nn::logcosh_loss(out[0], target);
  net.zero_grad();
  const std::vector<Tensor> grads{std::move(loss.grad)};
  net.backward(grads, false);

  ref::Net r = ref::snapshot(net);
  const auto xm = ref::to_matrix(x);
  const auto tm = ref::to_matrix(target);
  return ref::finite_difference_check(ref::analytic_gradient(net), ref::slots(r), [&](std::vector<char>* pattern) {
    const auto p = ref::forward(r, xm, pattern)[0];
    return kind == Loss::Mse ? ref::mse(p, tm) : kind == Loss::Bce ? ref::bce(p, tm) : ref::logcosh(p, tm);
  });
}

inline ref::GradCheck elbo_trial(Rng& rng) {
  imagine::vae::VaeArchitecture arch;
  arch.input_dim = between(rng, 2, 6);
  arch.hidden = {between(rng, 2, 16)};
  imagine::vae::Vae vae(arch, rng);
  randomize_biases(vae.encoder(), rng);
  randomize_biases(vae.decoder(), rng);
  const std::size_t batch = between(rng, 1, 4);
  const Tensor x = random_matrix(rng, batch, arch.input_dim, 0.0F, 1.0F);
  Tensor noise = Tensor::matrix(batch, imagine::vae::kLatentDim);
  for (float& v : noise.values()) v = rng.normal();
  const float beta = rng.uniform(0.5F, 4.0F);
  vae.encoder().zero_grad();
  vae.decoder().zero_grad();
  imagine::vae::elbo_backward(vae, x, noise, beta);

  std::vector<double> analytic = ref::analytic_gradient(vae.encoder());
  const auto dec_grad = ref::analytic_gradient(vae.decoder());
  analytic.insert(analytic.end(), dec_grad.begin(), dec_grad.end());
  ref::Net enc = ref::snapshot(vae.encoder());
  ref::Net dec = ref::snapshot(vae.decoder());
  std::vector<double*> params = ref::slots(enc);
  const auto dec_slots = ref::slots(dec);
  params.insert(params.end(), dec_slots.begin(), dec_slots.end());
  const auto xm = ref::to_matrix(x);
  const auto em = ref::to_matrix(noise);

  return ref::finite_difference_check(analytic, params, [&](std::vector<char>* pattern) {
    const auto heads = ref::forward(enc, xm, pattern);
    ref::Matrix z = heads[0];
    double kl = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < z[r].size(); ++j) z[r][j] += std::exp(0.5 * heads[1][r][j]) * em[r][j];
      kl += ref::kl(heads[0][r], heads[1][r]);
    }
    const auto recon = ref::forward(dec, z, pattern)[0];
    return ref::bce(recon, xm) + beta * kl / static_cast<double>(batch);
  });
}

inline ref::GradCheck mdn_trial(Rng& rng) {
  imagine::world::MdnSpec spec;
  spec.input_dim = between(rng, 2, 6);
  spec.hidden.assign(between(rng, 0, 1), between(rng, 2, 16));
  spec.dropout = 0.0F;
  spec.components = between(rng, 1, 5);
  spec.output_dim = between(rng, 1, 3);
  Network net(imagine::world::mdn_network_spec(spec), rng);
  randomize_biases(net, rng);
  const std::size_t batch = between(rng, 1, 4);
  const Tensor x = random_matrix(rng, batch, spec.input_dim, -1.0F, 1.0F);
  const Tensor y = random_matrix(rng, batch, spec.output_dim, -1.5F, 1.5F);
  const auto heads = net.forward(x, true, nullptr);
  auto loss = imagine::world::mdn_nll_batch(heads[0], heads[1], heads[2], y);
  net.zero_grad();
  const std::vector<Tensor> grads{std::move(loss.d_alpha), std::move(loss.d_mu), std::move(loss.d_logvar)};
  net.backward(grads, false);

  ref::Net r = ref::snapshot(net);
  const auto xm = ref::to_matrix(x);
  const auto ym = ref::to_matrix(y);
  return ref::finite_difference_check(ref::analytic_gradient(net), ref::slots(r), [&](std::vector<char>* pattern) {
    const auto h = ref::forward(r, xm, pattern);
    double total = 0.0;
    for (std::size_t row = 0; row < batch; ++row) total += ref::mdn_nll_row(h[0][row], h[1][row], h[2][row], ym[row]);
    return total / static_cast<double>(batch);
  });
}

}  // namespace gradsuite
