#include "imagine/vae/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "imagine/core/errors.hpp"
#include "imagine/nn/checkpoint.hpp"
#include "imagine/nn/losses.hpp"

namespace imagine::vae {

namespace {

nn::NetworkSpec encoder_spec(const VaeArchitecture& a) {
  nn::NetworkSpec spec;
  spec.input_dim = a.input_dim;
  for (std::size_t w : a.hidden) spec.trunk.push_back({w, nn::Activation::Relu});
  const nn::Init head_init = a.zero_init_heads ? nn::Init::Zero : nn::Init::Auto;
  spec.heads.push_back({kLatentDim, nn::Activation::Linear, 0.0F, head_init, "mu"});
  spec.heads.push_back({kLatentDim, nn::Activation::Linear, 0.0F, head_init, "logvar"});
  return spec;
}

nn::NetworkSpec decoder_spec(const VaeArchitecture& a) {
  nn::NetworkSpec spec;
  spec.input_dim = kLatentDim;
  for (auto it = a.hidden.rbegin(); it != a.hidden.rend(); ++it) spec.trunk.push_back({*it, nn::Activation::Relu});
  spec.heads.push_back({a.input_dim, nn::Activation::Sigmoid, 0.0F, nn::Init::Auto, "image"});
  return spec;
}

std::vector<nn::ParamRef> all_parameters(Vae& vae) {
  auto params = vae.encoder().parameters();
  for (auto& p : params) p.name = "encoder." + p.name;
  for (auto p : vae.decoder().parameters()) {
    p.name = "decoder." + p.name;
    params.push_back(p);
  }
  return params;
}

}  // namespace

Vae::Vae(VaeArchitecture architecture, Rng& init_rng)
    : architecture_(std::move(architecture)),
      encoder_(encoder_spec(architecture_), init_rng),
      decoder_(decoder_spec(architecture_), init_rng) {}

EncodedBatch Vae::encode_batch(const nn::Tensor& images) const {
  auto out = encoder_.predict(images);
  return {std::move(out[0]), std::move(out[1])};
}

LatentGaussian Vae::encode(std::span<const float> image) const {
  if (image.size() != input_dim()) throw ConfigError("encode: image has the wrong number of pixels");
  const auto batch = encode_batch(nn::Tensor::row_vector(image));
  LatentGaussian g;
  for (std::size_t j = 0; j < kLatentDim; ++j) {
    g.mu[j] = batch.mu[j];
    g.sigma[j] = std::exp(0.5F * batch.logvar[j]);
  }
  return g;
}

nn::Tensor Vae::decode_batch(const nn::Tensor& z) const { return std::move(decoder_.predict(z)[0]); }

render::Observation Vae::decode(const Latent& z) const {
  if (input_dim() != render::kPixels) throw UsageError("decode() to an Observation needs the full image layout");
  const auto out = decode_batch(nn::Tensor::row_vector(z));
  render::Observation obs;
  std::copy(out.values().begin(), out.values().end(), obs.pixels.begin());
  return obs;
}

std::vector<nn::NamedTensor> Vae::export_parameters() const {
  auto params = encoder_.export_parameters("encoder.");
  auto dec = decoder_.export_parameters("decoder.");
  params.insert(params.end(), std::make_move_iterator(dec.begin()), std::make_move_iterator(dec.end()));
  return params;
}

void Vae::import_parameters(const nn::ParameterMap& params) {
  encoder_.import_parameters(params, "encoder.");
  decoder_.import_parameters(params, "decoder.");
}

void Vae::save(const std::filesystem::path& path) const { nn::write_checkpoint(path, export_parameters()); }

void Vae::load(const std::filesystem::path& path) { import_parameters(nn::to_map(nn::read_checkpoint(path))); }

Latent sample_latent(const LatentGaussian& g, Rng& rng) {
  Latent z{};
  for (std::size_t j = 0; j < kLatentDim; ++j) z[j] = g.mu[j] + g.sigma[j] * rng.normal();
  return z;
}

double kl_divergence(std::span<const float> mu, std::span<const float> logvar) {
  double kl = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double m = mu[j];
    const double lv = logvar[j];
    kl += -0.5 * (1.0 + lv - m * m - std::exp(lv));
  }
  return kl;
}

ElboGradients elbo_loss(const nn::Tensor& images, const nn::Tensor& reconstruction, const nn::Tensor& mu,
                        const nn::Tensor& logvar, float beta) {
  if (mu.rows() != images.rows() || logvar.rows() != images.rows()) {
    throw ConfigError("elbo_loss: batch sizes differ");
  }
  ElboGradients out;
  auto bce = nn::bce_loss(reconstruction, images);
  out.terms.bce = bce.value;
  out.terms.saturated = bce.saturated;
  out.d_reconstruction = std::move(bce.grad);

  const std::size_t batch = mu.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  out.d_mu = nn::Tensor::matrix(batch, mu.cols());
  out.d_logvar = nn::Tensor::matrix(batch, mu.cols());
  for (std::size_t r = 0; r < batch; ++r) {
    out.terms.kl += kl_divergence(mu.row(r), logvar.row(r));
    for (std::size_t j = 0; j < mu.cols(); ++j) {
      out.d_mu.at(r, j) = static_cast<float>(beta * mu.at(r, j) * inv_batch);
      out.d_logvar.at(r, j) = static_cast<float>(beta * 0.5 * (std::exp(logvar.at(r, j)) - 1.0) * inv_batch);
    }
  }
  out.terms.kl *= inv_batch;
  out.terms.loss = out.terms.bce + beta * out.terms.kl;
  return out;
}

ElboTerms elbo_backward(Vae& vae, const nn::Tensor& images, const nn::Tensor& noise, float beta) {
  const std::size_t batch = images.rows();
  if (noise.rows() != batch || noise.cols() != kLatentDim) throw ConfigError("elbo_backward: noise must be B x 8");
  auto enc = vae.encoder().forward(images, true, nullptr);
  const nn::Tensor& mu = enc[0];
  const nn::Tensor& logvar = enc[1];
  nn::Tensor z = nn::Tensor::matrix(batch, kLatentDim);
  nn::Tensor sigma = nn::Tensor::matrix(batch, kLatentDim);
  for (std::size_t i = 0; i < z.size(); ++i) {
    sigma[i] = std::exp(0.5F * logvar[i]);
    z[i] = mu[i] + sigma[i] * noise[i];
  }
  auto recon = vae.decoder().forward(z, true, nullptr);
  auto loss = elbo_loss(images, recon[0], mu, logvar, beta);
  if (!std::isfinite(loss.terms.loss)) {
    throw NumericError("vae: non-finite ELBO (bce=" + std::to_string(loss.terms.bce) +
                       ", kl=" + std::to_string(loss.terms.kl) + ")");
  }

  const std::vector<nn::Tensor> dec_grads{std::move(loss.d_reconstruction)};
  const nn::Tensor dz = vae.decoder().backward(dec_grads);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    loss.d_mu[i] += dz[i];
    loss.d_logvar[i] += dz[i] * noise[i] * 0.5F * sigma[i];
  }
  const std::vector<nn::Tensor> enc_grads{std::move(loss.d_mu), std::move(loss.d_logvar)};
  vae.encoder().backward(enc_grads, false);
  return loss.terms;
}

nn::Tensor gather_images(const render::ImageSet& set, std::span<const std::size_t> indices) {
  nn::Tensor batch = nn::Tensor::matrix(indices.size(), render::kPixels);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto img = set.image(indices[r]);
    std::copy(img.begin(), img.end(), batch.row(r).begin());
  }
  return batch;
}

double evaluate_elbo_at_mean(const Vae& vae, const render::ImageSet& set, float beta) {
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += kChunk) {
    idx.resize(std::min(kChunk, set.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const nn::Tensor images = gather_images(set, idx);
    const auto enc = vae.encode_batch(images);
    const nn::Tensor recon = vae.decode_batch(enc.mu);
    const auto terms = elbo_loss(images, recon, enc.mu, enc.logvar, beta).terms;
    total += terms.loss * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(set.size());
}

std::vector<EpochStats> train_vae(Vae& vae, const render::ImageSet& train, const render::ImageSet& test,
                                  const VaeConfig& config, Rng& rng, const EpochCallback& on_epoch) {
  if (train.size() == 0) throw ConfigError("train_vae: empty training set");
  if (config.beta < 0.0F) throw ConfigError("train_vae: beta must be non-negative");
  if (config.batch_size == 0) throw ConfigError("train_vae: batch size must be positive");

  nn::Adam adam(all_parameters(vae), nn::AdamConfig{config.learning_rate});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochStats> curve;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      const nn::Tensor images = gather_images(train, std::span(order).subspan(start, n));
      nn::Tensor noise = nn::Tensor::matrix(n, kLatentDim);
      for (float& e : noise.values()) e = rng.normal();

      vae.encoder().zero_grad();
      vae.decoder().zero_grad();
      ElboTerms terms;
      try {
        terms = elbo_backward(vae, images, noise, config.beta);
        adam.step();
      } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << "VAE training diverged at epoch " << epoch << ", batch offset " << start << ": " << e.what();
        throw NumericError(msg.str());
      }
      const double w = static_cast<double>(n);
      stats.train_loss += terms.loss * w;
      stats.bce += terms.bce * w;
      stats.kl += terms.kl * w;
      stats.saturated += terms.saturated;
    }
    const double inv = 1.0 / static_cast<double>(train.size());
    stats.train_loss *= inv;
    stats.bce *= inv;
    stats.kl *= inv;
    stats.test_loss = test.size() > 0 ? evaluate_elbo_at_mean(vae, test, config.beta) : 0.0;
    curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return curve;
}

void write_loss_curve_csv(const std::filesystem::path& path, std::span<const EpochStats> curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "epoch,train_loss,test_loss,bce,kl\n";
  out.precision(9);
  for (const auto& s : curve) {
    out << s.epoch << ',' << s.train_loss << ',' << s.test_loss << ',' << s.bce << ',' << s.kl << '\n';
  }
}

}  // namespace imagine::vae
