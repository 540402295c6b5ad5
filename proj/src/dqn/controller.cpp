#include "imagine/dqn/controller.hpp"

#include <cmath>

#include "imagine/core/errors.hpp"
#include "imagine/nn/checkpoint.hpp"
#include "imagine/nn/losses.hpp"

namespace imagine::dqn {

namespace {

nn::NetworkSpec q_network_spec(const ControllerConfig& config) {
  nn::NetworkSpec spec;
  spec.input_dim = vae::kLatentDim;
  for (std::size_t w : config.hidden) spec.trunk.push_back({w, nn::Activation::Relu});
  spec.heads.push_back({env::kNumActions, nn::Activation::Linear, 0.0F, nn::Init::Auto, "q"});
  return spec;
}

ControllerStep fit_batch(Controller& controller, const nn::Tensor& z, std::span<const int> actions,
                         std::span<const float> rewards, const nn::Tensor& z_next,
                         std::span<const std::uint8_t> done, float gamma) {
  const auto targets = td_targets(controller, rewards, z_next, done, gamma);
  return {true, controller.train_on(z, actions, targets)};
}

}  // namespace

double EpsilonSchedule::value_at(std::uint64_t step) const noexcept {
  return eps_min + (eps_max - eps_min) * std::exp(-lambda * static_cast<double>(step));
}

int argmax_action(std::span<const float> q) {
  int best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  return best;
}

Controller::Controller(ControllerConfig config, Rng& init_rng)
    : net_(std::make_unique<nn::Network>(q_network_spec(config), init_rng)),
      adam_(std::make_unique<nn::Adam>(net_->parameters(), nn::AdamConfig{config.learning_rate})) {}

QValues Controller::q_values(const Latent& z) const {
  const auto out = net_->predict(nn::Tensor::row_vector(z));
  QValues q{};
  std::copy(out[0].values().begin(), out[0].values().end(), q.begin());
  return q;
}

nn::Tensor Controller::q_values_batch(const nn::Tensor& z) const { return std::move(net_->predict(z)[0]); }

int Controller::select_action(const Latent& z, double epsilon, Rng& rng) const {
  const float u = rng.uniform();
  if (u < epsilon) return static_cast<int>(rng.index(env::kNumActions));
  return greedy_action(z);
}

double Controller::train_on(const nn::Tensor& z, std::span<const int> actions, std::span<const float> targets) {
  net_->zero_grad();
  const auto out = net_->forward(z, true, nullptr);
  auto loss = nn::masked_mse_loss(out[0], actions, targets);
  if (!std::isfinite(loss.value)) throw NumericError("controller TD loss is not finite");
  const std::vector<nn::Tensor> grads{std::move(loss.grad)};
  net_->backward(grads, false);
  adam_->step();
  return loss.value;
}

void Controller::save(const std::filesystem::path& path) const { nn::write_checkpoint(path, export_parameters()); }

void Controller::load(const std::filesystem::path& path) { import_parameters(nn::to_map(nn::read_checkpoint(path))); }

float td_target(float reward, float max_q_next, bool done, float gamma) {
  return done ? reward : reward + gamma * max_q_next;
}

std::vector<float> td_targets(const Controller& controller, std::span<const float> rewards, const nn::Tensor& z_next,
                              std::span<const std::uint8_t> done, float gamma) {
  const nn::Tensor q_next = controller.q_values_batch(z_next);
  std::vector<float> y(rewards.size());
  for (std::size_t r = 0; r < rewards.size(); ++r) {
    const auto row = q_next.row(r);
    const float max_q = row[static_cast<std::size_t>(argmax_action(row))];
    y[r] = td_target(rewards[r], max_q, done[r] != 0, gamma);
  }
  return y;
}

ControllerStep train_controller_step(Controller& controller, const RealMemory& memory, std::size_t batch,
                                     float gamma, Rng& rng) {
  if (memory.empty() || batch == 0) return {};
  const auto idx = memory.sample_indices(batch, rng);
  nn::Tensor z = nn::Tensor::matrix(batch, vae::kLatentDim);
  nn::Tensor z_next = nn::Tensor::matrix(batch, vae::kLatentDim);
  std::vector<int> actions(batch);
  std::vector<float> rewards(batch);
  std::vector<std::uint8_t> done(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const Transition& t = memory[idx[r]];
    for (std::size_t j = 0; j < vae::kLatentDim; ++j) z.at(r, j) = t.mu_t[j] + t.sigma_t[j] * rng.normal();
    for (std::size_t j = 0; j < vae::kLatentDim; ++j) {
      z_next.at(r, j) = t.mu_next[j] + t.sigma_next[j] * rng.normal();
    }
    actions[r] = t.action;
    rewards[r] = t.reward;
    done[r] = t.done_next;
  }
  return fit_batch(controller, z, actions, rewards, z_next, done, gamma);
}

ControllerStep train_controller_step(Controller& controller, const ImaginaryMemory& memory, std::size_t batch,
                                     float gamma, Rng& rng) {
  if (memory.empty() || batch == 0) return {};
  const auto idx = memory.sample_indices(batch, rng);
  nn::Tensor z = nn::Tensor::matrix(batch, vae::kLatentDim);
  nn::Tensor z_next = nn::Tensor::matrix(batch, vae::kLatentDim);
  std::vector<int> actions(batch);
  std::vector<float> rewards(batch);
  std::vector<std::uint8_t> done(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const ImaginedTransition& t = memory[idx[r]];
    std::copy(t.z_t.begin(), t.z_t.end(), z.row(r).begin());
    std::copy(t.z_next.begin(), t.z_next.end(), z_next.row(r).begin());
    actions[r] = t.action;
    rewards[r] = t.reward;
    done[r] = t.done;
  }
  return fit_batch(controller, z, actions, rewards, z_next, done, gamma);
}

}  // namespace imagine::dqn
