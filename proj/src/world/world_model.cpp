#include "imagine/world/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "imagine/core/errors.hpp"
#include "imagine/nn/checkpoint.hpp"
#include "imagine/nn/losses.hpp"

namespace imagine::world {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kAlphaFloor = 1e-30;

nn::NetworkSpec scalar_head_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden, float dropout,
                                 nn::Activation out, const char* name) {
  nn::NetworkSpec spec;
  spec.input_dim = input_dim;
  for (std::size_t w : hidden) spec.trunk.push_back({w, nn::Activation::Relu, dropout});
  spec.heads.push_back({1, out, 0.0F, nn::Init::Auto, name});
  return spec;
}

// log N(y; m, exp(lv)) summed over dims, per component, written to `out`.
void component_log_densities(std::span<const float> alpha, std::span<const float> mu, std::span<const float> logvar,
                             std::span<const float> y, std::vector<double>& out) {
  const std::size_t k_count = alpha.size();
  const std::size_t dim = y.size();
  out.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    double lp = std::log(std::max<double>(alpha[k], kAlphaFloor));
    for (std::size_t j = 0; j < dim; ++j) {
      const double lv = logvar[k * dim + j];
      const double d = static_cast<double>(y[j]) - mu[k * dim + j];
      lp += -kHalfLog2Pi - 0.5 * lv - 0.5 * d * d * std::exp(-lv);
    }
    out[k] = lp;
  }
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double mdn_nll(const MixtureParams& params, std::span<const float> target) {
  if (target.size() != params.dim) throw ConfigError("mdn_nll: target dimension mismatch");
  std::vector<double> lp(params.components);
  for (std::size_t k = 0; k < params.components; ++k) {
    double v = std::log(std::max<double>(params.alpha[k], kAlphaFloor));
    for (std::size_t j = 0; j < params.dim; ++j) {
      const double var = params.variance(k, j);
      const double d = static_cast<double>(target[j]) - params.mean(k, j);
      v += -kHalfLog2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
    }
    lp[k] = v;
  }
  return -log_sum_exp(lp);
}

std::vector<float> mdn_sample(const MixtureParams& params, Rng& rng) {
  const float u = rng.uniform();
  float cumulative = 0.0F;
  std::size_t k = params.components - 1;
  for (std::size_t i = 0; i < params.components; ++i) {
    cumulative += params.alpha[i];
    if (u < cumulative) {
      k = i;
      break;
    }
  }
  std::vector<float> y(params.dim);
  for (std::size_t j = 0; j < params.dim; ++j) {
    y[j] = params.mean(k, j) + std::sqrt(params.variance(k, j)) * rng.normal();
  }
  return y;
}

MdnBatchLoss mdn_nll_batch(const nn::Tensor& alpha, const nn::Tensor& mu, const nn::Tensor& logvar,
                           const nn::Tensor& target) {
  const std::size_t batch = target.rows();
  const std::size_t k_count = alpha.cols();
  const std::size_t dim = target.cols();
  if (alpha.rows() != batch || mu.rows() != batch || logvar.rows() != batch || mu.cols() != k_count * dim ||
      logvar.cols() != k_count * dim) {
    throw ConfigError("mdn_nll_batch: inconsistent head shapes");
  }
  MdnBatchLoss out;
  out.d_alpha = nn::Tensor::matrix(batch, k_count);
  out.d_mu = nn::Tensor::matrix(batch, k_count * dim);
  out.d_logvar = nn::Tensor::matrix(batch, k_count * dim);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  std::vector<double> lp;
  for (std::size_t r = 0; r < batch; ++r) {
    const auto a = alpha.row(r);
    const auto m = mu.row(r);
    const auto lv = logvar.row(r);
    const auto y = target.row(r);
    component_log_densities(a, m, lv, y, lp);
    const double lse = log_sum_exp(lp);
    out.value -= lse;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double w = std::exp(lp[k] - lse);  // responsibility
      out.d_alpha.at(r, k) = static_cast<float>(-w / std::max<double>(a[k], kAlphaFloor) * inv_batch);
      for (std::size_t j = 0; j < dim; ++j) {
        const std::size_t c = k * dim + j;
        const double inv_var = std::exp(-static_cast<double>(lv[c]));
        const double d = static_cast<double>(y[j]) - m[c];
        out.d_mu.at(r, c) = static_cast<float>(-w * d * inv_var * inv_batch);
        out.d_logvar.at(r, c) = static_cast<float>(0.5 * w * (1.0 - d * d * inv_var) * inv_batch);
      }
    }
  }
  out.value *= inv_batch;
  return out;
}

nn::NetworkSpec mdn_network_spec(const MdnSpec& spec) {
  if (spec.components == 0 || spec.output_dim == 0) throw ConfigError("MDN needs at least one component and dim");
  nn::NetworkSpec net;
  net.input_dim = spec.input_dim;
  for (std::size_t w : spec.hidden) net.trunk.push_back({w, nn::Activation::Relu, spec.dropout});
  net.heads.push_back({spec.components, nn::Activation::Softmax, 0.0F, nn::Init::Auto, "alpha"});
  net.heads.push_back({spec.components * spec.output_dim, nn::Activation::Linear, 0.0F, nn::Init::Auto, "mu"});
  net.heads.push_back({spec.components * spec.output_dim, nn::Activation::Linear, 0.0F, nn::Init::Auto, "logvar"});
  return net;
}

MixtureParams mixture_from_heads(const std::vector<nn::Tensor>& heads, std::size_t row, std::size_t components) {
  MixtureParams p;
  p.components = components;
  p.dim = heads[1].cols() / components;
  const auto a = heads[0].row(row);
  const auto m = heads[1].row(row);
  const auto lv = heads[2].row(row);
  p.alpha.assign(a.begin(), a.end());
  p.mu.assign(m.begin(), m.end());
  p.var.resize(lv.size());
  for (std::size_t i = 0; i < lv.size(); ++i) p.var[i] = std::exp(lv[i]);
  return p;
}

double mdn_mean_nll(const nn::Network& mdn, const nn::Tensor& inputs, const nn::Tensor& targets) {
  const auto heads = mdn.predict(inputs);
  return mdn_nll_batch(heads[0], heads[1], heads[2], targets).value;
}

double mdn_train_step(nn::Network& mdn, nn::Adam& adam, const nn::Tensor& inputs, const nn::Tensor& targets,
                      Rng& dropout_rng) {
  mdn.zero_grad();
  const auto heads = mdn.forward(inputs, true, &dropout_rng);
  auto loss = mdn_nll_batch(heads[0], heads[1], heads[2], targets);
  if (!std::isfinite(loss.value)) throw NumericError("MDN NLL is not finite");
  const std::vector<nn::Tensor> grads{std::move(loss.d_alpha), std::move(loss.d_mu), std::move(loss.d_logvar)};
  mdn.backward(grads, false);
  adam.step();
  return loss.value;
}

nn::Tensor model_inputs(const nn::Tensor& z, std::span<const int> actions) {
  if (z.rows() != actions.size() || z.cols() != kLatentDim) throw ConfigError("model_inputs: expected B x 8 latents");
  nn::Tensor x = nn::Tensor::matrix(z.rows(), kModelInputDim);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto src = z.row(r);
    auto dst = x.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    const int a = actions[r];
    if (a < 0 || a >= env::kNumActions) throw UsageError("model_inputs: action out of range");
    dst[kLatentDim + static_cast<std::size_t>(a)] = 1.0F;
  }
  return x;
}

WorldModel::WorldModel(WorldModelConfig config, Rng& init_rng) : config_(std::move(config)) {
  if (config_.mdn.output_dim != kLatentDim || config_.mdn.input_dim != kModelInputDim) {
    throw ConfigError("world model MDN must map 14 inputs to 8-dim latents");
  }
  mdn_ = std::make_unique<nn::Network>(mdn_network_spec(config_.mdn), init_rng);
  reward_ = std::make_unique<nn::Network>(
      scalar_head_spec(kLatentDim, config_.reward_hidden, config_.dropout, nn::Activation::Linear, "reward"), init_rng);
  done_ = std::make_unique<nn::Network>(
      scalar_head_spec(kLatentDim, config_.done_hidden, config_.dropout, nn::Activation::Sigmoid, "done"), init_rng);
  const nn::AdamConfig adam{config_.learning_rate};
  mdn_adam_ = std::make_unique<nn::Adam>(mdn_->parameters(), adam);
  reward_adam_ = std::make_unique<nn::Adam>(reward_->parameters(), adam);
  done_adam_ = std::make_unique<nn::Adam>(done_->parameters(), adam);
}

MixtureParams WorldModel::mdn_forward(const Latent& z, int action) const {
  const int actions[1] = {action};
  const auto heads = mdn_->predict(model_inputs(nn::Tensor::row_vector(z), actions));
  return mixture_from_heads(heads, 0, config_.mdn.components);
}

float WorldModel::predict_reward(const Latent& z_next) const {
  return reward_->predict(nn::Tensor::row_vector(z_next))[0][0];
}

float WorldModel::predict_done(const Latent& z_next) const {
  return done_->predict(nn::Tensor::row_vector(z_next))[0][0];
}

ModelLosses WorldModel::update(const nn::Tensor& z, std::span<const int> actions, const nn::Tensor& z_next,
                               std::span<const float> rewards, std::span<const float> dones, Rng& dropout_rng) {
  const std::size_t batch = z.rows();
  if (rewards.size() != batch || dones.size() != batch || z_next.rows() != batch) {
    throw ConfigError("world model update: batch sizes differ");
  }
  ModelLosses losses;
  losses.nll = mdn_train_step(*mdn_, *mdn_adam_, model_inputs(z, actions), z_next, dropout_rng);

  const nn::Tensor reward_target({batch, 1}, std::vector<float>(rewards.begin(), rewards.end()));
  reward_->zero_grad();
  auto r_out = reward_->forward(z_next, true, &dropout_rng);
  auto r_loss = nn::logcosh_loss(r_out[0], reward_target);
  const std::vector<nn::Tensor> r_grads{std::move(r_loss.grad)};
  reward_->backward(r_grads, false);
  reward_adam_->step();
  losses.reward = r_loss.value;

  const nn::Tensor done_target({batch, 1}, std::vector<float>(dones.begin(), dones.end()));
  done_->zero_grad();
  auto d_out = done_->forward(z_next, true, &dropout_rng);
  auto d_loss = nn::bce_loss(d_out[0], done_target);
  const std::vector<nn::Tensor> d_grads{std::move(d_loss.grad)};
  done_->backward(d_grads, false);
  done_adam_->step();
  losses.done = d_loss.value;

  if (!std::isfinite(losses.reward) || !std::isfinite(losses.done)) {
    throw NumericError("world model loss is not finite (reward=" + std::to_string(losses.reward) +
                       ", done=" + std::to_string(losses.done) + ")");
  }
  return losses;
}

double WorldModel::mean_nll(const nn::Tensor& z, std::span<const int> actions, const nn::Tensor& z_next) const {
  return mdn_mean_nll(*mdn_, model_inputs(z, actions), z_next);
}

std::uint64_t WorldModel::fingerprint() const {
  return nn::parameter_fingerprint(*mdn_) ^ (nn::parameter_fingerprint(*reward_) * 3) ^
         (nn::parameter_fingerprint(*done_) * 5);
}

std::vector<nn::NamedTensor> WorldModel::export_parameters() const {
  auto out = mdn_->export_parameters("mdn.");
  for (auto& t : reward_->export_parameters("reward.")) out.push_back(std::move(t));
  for (auto& t : done_->export_parameters("done.")) out.push_back(std::move(t));
  return out;
}

void WorldModel::import_parameters(const nn::ParameterMap& params) {
  mdn_->import_parameters(params, "mdn.");
  reward_->import_parameters(params, "reward.");
  done_->import_parameters(params, "done.");
}

void WorldModel::save(const std::filesystem::path& path) const { nn::write_checkpoint(path, export_parameters()); }

void WorldModel::load(const std::filesystem::path& path) { import_parameters(nn::to_map(nn::read_checkpoint(path))); }

ModelLosses train_model_step(WorldModel& model, const dqn::RealMemory& memory, std::size_t n_updates,
                             std::size_t batch, Rng& rng, bool resample) {
  ModelLosses mean;
  if (memory.empty() || n_updates == 0) return mean;
  nn::Tensor z = nn::Tensor::matrix(batch, kLatentDim);
  nn::Tensor z_next = nn::Tensor::matrix(batch, kLatentDim);
  std::vector<int> actions(batch);
  std::vector<float> rewards(batch);
  std::vector<float> dones(batch);
  for (std::size_t u = 0; u < n_updates; ++u) {
    const auto idx = memory.sample_indices(batch, rng);
    for (std::size_t r = 0; r < batch; ++r) {
      const dqn::Transition& t = memory[idx[r]];
      for (std::size_t j = 0; j < kLatentDim; ++j) {
        z.at(r, j) = resample ? t.mu_t[j] + t.sigma_t[j] * rng.normal() : t.mu_t[j];
      }
      for (std::size_t j = 0; j < kLatentDim; ++j) {
        z_next.at(r, j) = resample ? t.mu_next[j] + t.sigma_next[j] * rng.normal() : t.mu_next[j];
      }
      actions[r] = t.action;
      rewards[r] = t.reward;
      dones[r] = t.done_next ? 1.0F : 0.0F;
    }
    const auto l = model.update(z, actions, z_next, rewards, dones, rng);
    mean.nll += l.nll;
    mean.reward += l.reward;
    mean.done += l.done;
  }
  const double inv = 1.0 / static_cast<double>(n_updates);
  mean.nll *= inv;
  mean.reward *= inv;
  mean.done *= inv;
  return mean;
}

RolloutBatch generate_rollouts(const WorldModel& model, const vae::LatentGaussian& seed, const RolloutPolicy& policy,
                               std::size_t breadth, std::size_t depth, Rng& rng) {
  RolloutBatch out;
  out.rollouts.reserve(breadth);
  for (std::size_t b = 0; b < breadth; ++b) {
    Rollout rollout;
    Latent z = vae::sample_latent(seed, rng);
    for (std::size_t step = 0; step < depth; ++step) {
      const int action = policy(z, rng);
      const auto mixture = model.mdn_forward(z, action);
      const auto sample = mdn_sample(mixture, rng);
      Latent next{};
      bool finite = true;
      for (std::size_t j = 0; j < kLatentDim; ++j) {
        next[j] = sample[j];
        finite = finite && std::isfinite(next[j]);
      }
      const float reward = finite ? model.predict_reward(next) : 0.0F;
      const float done_p = finite ? model.predict_done(next) : 0.0F;
      if (!finite || !std::isfinite(reward) || !std::isfinite(done_p)) {
        rollout.diverged = true;
        ++out.divergence_events;
        break;
      }
      const bool done = done_p > 0.5F;
      rollout.steps.push_back({z, action, next, reward, done});
      z = next;
      if (done) break;
    }
    out.rollouts.push_back(std::move(rollout));
  }
  return out;
}

}  // namespace imagine::world
