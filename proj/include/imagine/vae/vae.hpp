#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/nn/adam.hpp"
#include "imagine/nn/network.hpp"
#include "imagine/render/dataset.hpp"
#include "imagine/render/render.hpp"

namespace imagine::vae {

inline constexpr std::size_t kLatentDim = 8;

using Latent = std::array<float, kLatentDim>;

struct LatentGaussian {
  Latent mu{};
  Latent sigma{};  // standard deviations, > 0
};

struct VaeArchitecture {
  std::size_t input_dim = render::kPixels;
  std::vector<std::size_t> hidden{1024, 512};  // encoder widths; the decoder mirrors them
  bool zero_init_heads = false;                // mu/logvar heads start at 0 => N(0, I) posterior
};

struct VaeConfig {
  VaeArchitecture architecture;
  float beta = 4.0F;
  float learning_rate = 5e-4F;
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
};

// Posterior statistics for a batch; sigma = exp(logvar / 2).
struct EncodedBatch {
  nn::Tensor mu;      // B x 8
  nn::Tensor logvar;  // B x 8
};

class Vae {
 public:
  Vae(VaeArchitecture architecture, Rng& init_rng);

  const VaeArchitecture& architecture() const noexcept { return architecture_; }
  std::size_t input_dim() const noexcept { return architecture_.input_dim; }

  // Eval-mode encoding; deterministic and const.
  LatentGaussian encode(std::span<const float> image) const;
  EncodedBatch encode_batch(const nn::Tensor& images) const;

  render::Observation decode(const Latent& z) const;
  nn::Tensor decode_batch(const nn::Tensor& z) const;  // B x input_dim, values in (0, 1)

  nn::Network& encoder() noexcept { return encoder_; }
  nn::Network& decoder() noexcept { return decoder_; }
  const nn::Network& encoder() const noexcept { return encoder_; }
  const nn::Network& decoder() const noexcept { return decoder_; }

  std::vector<nn::NamedTensor> export_parameters() const;
  void import_parameters(const nn::ParameterMap& params);
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  VaeArchitecture architecture_;
  nn::Network encoder_;
  nn::Network decoder_;
};

// z = mu + sigma * eps, eps ~ N(0, I).
Latent sample_latent(const LatentGaussian& g, Rng& rng);

// -1/2 * sum_j (1 + logvar_j - mu_j^2 - exp(logvar_j)); >= 0.
double kl_divergence(std::span<const float> mu, std::span<const float> logvar);

struct ElboTerms {
  double loss = 0.0;  // bce + beta * kl, per-sample mean
  double bce = 0.0;
  double kl = 0.0;
  std::size_t saturated = 0;
};

struct ElboGradients {
  ElboTerms terms;
  nn::Tensor d_reconstruction;
  nn::Tensor d_mu;
  nn::Tensor d_logvar;
};

// Pixel-wise BCE summed per image plus beta-weighted KL, averaged over the batch.
ElboGradients elbo_loss(const nn::Tensor& images, const nn::Tensor& reconstruction, const nn::Tensor& mu,
                        const nn::Tensor& logvar, float beta);

// One full reparameterized pass with the given noise (B x 8): accumulates
// encoder and decoder gradients and returns the loss terms.
ElboTerms elbo_backward(Vae& vae, const nn::Tensor& images, const nn::Tensor& noise, float beta);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;  // evaluated at z = mu
  double bce = 0.0;
  double kl = 0.0;
  std::size_t saturated = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Adam on the ELBO. Throws NumericError if the loss diverges.
std::vector<EpochStats> train_vae(Vae& vae, const render::ImageSet& train, const render::ImageSet& test,
                                  const VaeConfig& config, Rng& rng, const EpochCallback& on_epoch = {});

double evaluate_elbo_at_mean(const Vae& vae, const render::ImageSet& set, float beta);

void write_loss_curve_csv(const std::filesystem::path& path, std::span<const EpochStats> curve);

nn::Tensor gather_images(const render::ImageSet& set, std::span<const std::size_t> indices);

}  // namespace imagine::vae
