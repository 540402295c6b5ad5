#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imagine/env/puzzle.hpp"

namespace imagine::trainer {

// Desk-scale defaults. Key names in config files match the field names.
struct TrainConfig {
  std::size_t num_episodes = 500;
  long long i_start = -1;  // episode at which rollouts begin; < 0 means 25% of num_episodes
  std::size_t i_d = 10;    // rollout depth
  std::size_t i_b = 3;     // rollouts per step
  std::size_t n_e = 4;     // model updates per step (paper: 16)
  std::size_t n_r = 1;     // controller updates on real memory per step
  std::size_t n_i = 1;     // controller updates on imaginary memory per step
  std::size_t model_batch = 128;  // paper: 512
  std::size_t controller_batch = 64;
  float gamma = 0.95F;
  env::Variant variant = env::Variant::Easy;
  bool augmented = true;
  std::uint64_t seed = 0;

  double eps_min = 0.001;
  double eps_max = 0.8;
  double eps_lambda = 0.03;
  float model_lr = 1e-3F;
  float controller_lr = 1e-3F;
  std::size_t real_capacity = 50'000;
  std::size_t imaginary_capacity = 3'000;
  bool resample_latents = true;
  std::size_t checkpoint_interval = 0;  // episodes; 0 disables

  std::size_t effective_i_start() const noexcept {
    return i_start < 0 ? num_episodes / 4 : static_cast<std::size_t>(i_start);
  }
};

// N_E = 16 and model batch 512.
void apply_paper_scale(TrainConfig& config);

// Throws ConfigError for unknown keys, malformed values and violated invariants.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);
void validate(const TrainConfig& config);

// key=value lines; blank lines and '#' comments are ignored.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base = {});

// All keys in declaration order, values in canonical text form.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& config);
std::string format_train_config(const TrainConfig& config);
std::string config_digest(const TrainConfig& config);

}  // namespace imagine::trainer
