#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/dqn/replay.hpp"
#include "imagine/env/puzzle.hpp"
#include "imagine/nn/adam.hpp"
#include "imagine/nn/network.hpp"

namespace imagine::dqn {

using QValues = std::array<float, env::kNumActions>;

// eps(t) = eps_min + (eps_max - eps_min) * exp(-lambda * t); t counts finished episodes.
struct EpsilonSchedule {
  double eps_min = 0.001;
  double eps_max = 0.8;
  double lambda = 0.03;
  std::uint64_t t = 0;

  double value() const noexcept { return value_at(t); }
  double value_at(std::uint64_t step) const noexcept;
  void advance() noexcept { ++t; }
};

struct ControllerConfig {
  std::vector<std::size_t> hidden{512, 256, 128};
  float learning_rate = 1e-3F;
};

inline constexpr float kDefaultGamma = 0.95F;

// Lowest index wins ties.
int argmax_action(std::span<const float> q);

class Controller {
 public:
  Controller(ControllerConfig config, Rng& init_rng);
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;
  Controller(Controller&&) noexcept = default;
  Controller& operator=(Controller&&) noexcept = default;

  QValues q_values(const Latent& z) const;
  nn::Tensor q_values_batch(const nn::Tensor& z) const;  // B x 6
  int greedy_action(const Latent& z) const { return argmax_action(q_values(z)); }

  // Draws one uniform u; u < epsilon picks a uniform random action, otherwise argmax.
  int select_action(const Latent& z, double epsilon, Rng& rng) const;

  // One Adam step on (Q(z, a) - target)^2 for the taken actions only; returns the loss.
  double train_on(const nn::Tensor& z, std::span<const int> actions, std::span<const float> targets);

  nn::Network& network() noexcept { return *net_; }
  const nn::Network& network() const noexcept { return *net_; }
  std::uint64_t fingerprint() const { return nn::parameter_fingerprint(*net_); }

  std::vector<nn::NamedTensor> export_parameters() const { return net_->export_parameters("q."); }
  void import_parameters(const nn::ParameterMap& params) { net_->import_parameters(params, "q."); }
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::unique_ptr<nn::Network> net_;
  std::unique_ptr<nn::Adam> adam_;
};

// y = r when done, otherwise r + gamma * max_q_next.
float td_target(float reward, float max_q_next, bool done, float gamma);

// Batched targets with max Q from the controller itself (no target network).
std::vector<float> td_targets(const Controller& controller, std::span<const float> rewards, const nn::Tensor& z_next,
                              std::span<const std::uint8_t> done, float gamma);

struct ControllerStep {
  bool trained = false;
  double loss = 0.0;
};

// Real batches resample z_t and z_next from the stored Gaussians; timeouts bootstrap.
ControllerStep train_controller_step(Controller& controller, const RealMemory& memory, std::size_t batch,
                                     float gamma, Rng& rng);
// Imagined batches use the stored latents directly.
ControllerStep train_controller_step(Controller& controller, const ImaginaryMemory& memory, std::size_t batch,
                                     float gamma, Rng& rng);

}  // namespace imagine::dqn
