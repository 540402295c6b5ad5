#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/dqn/replay.hpp"
#include "imagine/env/puzzle.hpp"
#include "imagine/nn/adam.hpp"
#include "imagine/nn/network.hpp"
#include "imagine/vae/vae.hpp"

namespace imagine::world {

using vae::Latent;
using vae::kLatentDim;

inline constexpr std::size_t kComponents = 5;
inline constexpr std::size_t kModelInputDim = kLatentDim + env::kNumActions;

// Gaussian mixture with diagonal covariances; mu and var are components x dim, row-major.
struct MixtureParams {
  std::size_t components = 0;
  std::size_t dim = 0;
  std::vector<float> alpha;
  std::vector<float> mu;
  std::vector<float> var;

  float mean(std::size_t k, std::size_t j) const { return mu[k * dim + j]; }
  float variance(std::size_t k, std::size_t j) const { return var[k * dim + j]; }
};

// -log sum_k alpha_k prod_j N(y_j; mu_kj, var_kj), via log-sum-exp in double.
double mdn_nll(const MixtureParams& params, std::span<const float> target);

// k ~ Categorical(alpha), then y ~ N(mu_k, diag(var_k)).
std::vector<float> mdn_sample(const MixtureParams& params, Rng& rng);

struct MdnBatchLoss {
  double value = 0.0;  // mean NLL over rows
  nn::Tensor d_alpha;
  nn::Tensor d_mu;
  nn::Tensor d_logvar;
};

// Batched NLL on raw head outputs (alpha: B x K, mu/logvar: B x K*D) with gradients.
MdnBatchLoss mdn_nll_batch(const nn::Tensor& alpha, const nn::Tensor& mu, const nn::Tensor& logvar,
                           const nn::Tensor& target);

struct MdnSpec {
  std::size_t input_dim = kModelInputDim;
  std::vector<std::size_t> hidden{256, 256, 256};
  float dropout = 0.5F;
  std::size_t components = kComponents;
  std::size_t output_dim = kLatentDim;
};

// Heads: alpha (softmax), mu (linear), logvar (linear, exponentiated at use).
nn::NetworkSpec mdn_network_spec(const MdnSpec& spec);

MixtureParams mixture_from_heads(const std::vector<nn::Tensor>& heads, std::size_t row, std::size_t components);

// Mean NLL of targets under an MDN in eval mode.
double mdn_mean_nll(const nn::Network& mdn, const nn::Tensor& inputs, const nn::Tensor& targets);

// One Adam step of the MDN on (inputs, targets); returns the batch NLL.
double mdn_train_step(nn::Network& mdn, nn::Adam& adam, const nn::Tensor& inputs, const nn::Tensor& targets,
                      Rng& dropout_rng);

struct WorldModelConfig {
  MdnSpec mdn;
  std::vector<std::size_t> reward_hidden{512, 512, 512};
  std::vector<std::size_t> done_hidden{256, 256};
  float dropout = 0.5F;  // r- and d-network hidden layers
  float learning_rate = 1e-3F;
};

struct ModelLosses {
  double nll = 0.0;
  double reward = 0.0;  // logcosh
  double done = 0.0;    // BCE
};

// [z | one_hot(a)] rows.
nn::Tensor model_inputs(const nn::Tensor& z, std::span<const int> actions);

class WorldModel {
 public:
  WorldModel(WorldModelConfig config, Rng& init_rng);
  WorldModel(const WorldModel&) = delete;
  WorldModel& operator=(const WorldModel&) = delete;
  WorldModel(WorldModel&&) noexcept = default;
  WorldModel& operator=(WorldModel&&) noexcept = default;

  const WorldModelConfig& config() const noexcept { return config_; }

  MixtureParams mdn_forward(const Latent& z, int action) const;
  float predict_reward(const Latent& z_next) const;
  float predict_done(const Latent& z_next) const;  // probability in (0, 1)

  // One Adam step for each of the three networks on the given batch.
  ModelLosses update(const nn::Tensor& z, std::span<const int> actions, const nn::Tensor& z_next,
                     std::span<const float> rewards, std::span<const float> dones, Rng& dropout_rng);

  double mean_nll(const nn::Tensor& z, std::span<const int> actions, const nn::Tensor& z_next) const;

  nn::Network& mdn() noexcept { return *mdn_; }
  nn::Network& reward_net() noexcept { return *reward_; }
  nn::Network& done_net() noexcept { return *done_; }
  const nn::Network& mdn() const noexcept { return *mdn_; }
  const nn::Network& reward_net() const noexcept { return *reward_; }
  const nn::Network& done_net() const noexcept { return *done_; }

  std::uint64_t fingerprint() const;
  std::vector<nn::NamedTensor> export_parameters() const;
  void import_parameters(const nn::ParameterMap& params);
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  WorldModelConfig config_;
  std::unique_ptr<nn::Network> mdn_;
  std::unique_ptr<nn::Network> reward_;
  std::unique_ptr<nn::Network> done_;
  std::unique_ptr<nn::Adam> mdn_adam_;
  std::unique_ptr<nn::Adam> reward_adam_;
  std::unique_ptr<nn::Adam> done_adam_;
};

// n_updates model updates on batches drawn from real memory. With `resample`, z_t and
// z_{t+1} are drawn fresh from the stored Gaussians per occurrence; otherwise z := mu.
// Returns the losses averaged over the updates.
ModelLosses train_model_step(WorldModel& model, const dqn::RealMemory& memory, std::size_t n_updates,
                             std::size_t batch, Rng& rng, bool resample = true);

struct Rollout {
  std::vector<dqn::ImaginedTransition> steps;
  bool diverged = false;
};

struct RolloutBatch {
  std::vector<Rollout> rollouts;
  std::size_t divergence_events = 0;
};

using RolloutPolicy = std::function<int(const Latent& z, Rng& rng)>;

// `breadth` closed-loop rollouts from z0 ~ N(mu_seed, sigma_seed), each stopping at the
// first predicted terminal or after `depth` steps. Networks run in eval mode.
RolloutBatch generate_rollouts(const WorldModel& model, const vae::LatentGaussian& seed, const RolloutPolicy& policy,
                               std::size_t breadth, std::size_t depth, Rng& rng);

}  // namespace imagine::world
