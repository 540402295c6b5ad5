#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "imagine/dqn/controller.hpp"
#include "imagine/dqn/replay.hpp"
#include "imagine/render/render.hpp"
#include "imagine/trainer/config.hpp"
#include "imagine/vae/vae.hpp"
#include "imagine/world/world_model.hpp"

namespace imagine::trainer {

struct EpisodeLog {
  std::size_t episode = 0;
  std::size_t steps = 0;
  double total_reward = 0.0;
  env::TerminalKind terminal_kind = env::TerminalKind::None;
  double epsilon = 0.0;
  double wall_seconds = 0.0;
  // Means over the episode's updates; zero when no update ran.
  double model_nll = 0.0;
  double reward_loss = 0.0;
  double done_loss = 0.0;
  double controller_loss = 0.0;
  std::size_t imagined = 0;  // imaginary transitions stored during the episode
};

// Equality on everything except wall-clock time.
bool identical_except_time(const EpisodeLog& a, const EpisodeLog& b);
// Equality on the fields the controller path determines (ignores model losses and time).
bool same_trajectory(const EpisodeLog& a, const EpisodeLog& b);

struct TrainCounters {
  std::uint64_t env_steps = 0;
  std::uint64_t real_insertions = 0;
  std::uint64_t imaginary_insertions = 0;
  std::uint64_t model_updates = 0;
  std::uint64_t controller_updates_real = 0;
  std::uint64_t controller_updates_imaginary = 0;
  std::uint64_t rollout_calls = 0;
  std::uint64_t divergence_events = 0;
  std::uint64_t first_imagined_episode = UINT64_MAX;
};

struct TrainResult {
  TrainConfig config;
  std::unique_ptr<dqn::Controller> controller;
  std::unique_ptr<world::WorldModel> model;  // null on the standalone baseline path
  std::unique_ptr<dqn::RealMemory> real_memory;
  std::unique_ptr<dqn::ImaginaryMemory> imaginary_memory;
  std::vector<EpisodeLog> logs;
  TrainCounters counters;
};

struct TrainHooks {
  std::function<void(const EpisodeLog&)> on_episode;
  // Every checkpoint_interval episodes, with the number of finished episodes.
  std::function<void(std::size_t episodes_done, const TrainResult& state)> on_checkpoint;
  // Where to dump controller/model/memories if training diverges; empty disables.
  std::filesystem::path diagnostics_dir;
};

// The interleaved real/imaginary loop. The encoder is only read.
TrainResult run_training(const TrainConfig& config, const vae::Vae& encoder, const render::FragmentPool& pool,
                         const TrainHooks& hooks = {});

// DQN on real transitions only, with no world model at all. Under equal seeds it
// reproduces run_training with augmented=false.
TrainResult run_baseline_dqn(const TrainConfig& config, const vae::Vae& encoder, const render::FragmentPool& pool,
                             const TrainHooks& hooks = {});

struct PairedResult {
  std::uint64_t seed = 0;
  TrainResult baseline;
  TrainResult augmented;
};

using PairHook = std::function<TrainHooks(std::uint64_t seed, bool augmented)>;

// One baseline and one augmented agent per seed, otherwise identical configs.
// Runs execute on up to `threads` workers; results follow the order of `seeds`.
std::vector<PairedResult> run_baseline_and_augmented(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                                                     const vae::Vae& encoder, const render::FragmentPool& pool,
                                                     std::size_t threads = 1, const PairHook& hooks = {});

void write_episode_log_csv(const std::filesystem::path& path, std::span<const EpisodeLog> logs);

}  // namespace imagine::trainer
