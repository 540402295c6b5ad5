#include "imagine/trainer/trainer.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "imagine/core/errors.hpp"
#include "imagine/render/environment.hpp"

namespace imagine::trainer {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kControllerInit = 0;
constexpr std::uint64_t kModelInit = 1;

std::unique_ptr<dqn::Controller> make_controller(const TrainConfig& config, const Rng& root) {
  Rng init = root.fork(streams::kInit).fork(kControllerInit);
  dqn::ControllerConfig cc;
  cc.learning_rate = config.controller_lr;
  return std::make_unique<dqn::Controller>(cc, init);
}

dqn::EpsilonSchedule make_schedule(const TrainConfig& config) {
  return {config.eps_min, config.eps_max, config.eps_lambda, 0};
}

dqn::Transition make_transition(const vae::LatentGaussian& g, int action, const vae::LatentGaussian& next,
                                const render::ObservedEnvironment::Feedback& fb) {
  return {g.mu, g.sigma, action, next.mu, next.sigma, fb.reward, fb.done, fb.timeout};
}

void dump_diagnostics(const std::filesystem::path& dir, const TrainResult& state, const std::string& what) {
  if (dir.empty()) return;
  try {
    std::filesystem::create_directories(dir);
    state.controller->save(dir / "controller.nnck");
    if (state.model) state.model->save(dir / "world_model.nnck");
    dqn::write_memory(dir / "real_memory.rply", *state.real_memory);
    dqn::write_memory(dir / "imaginary_memory.rply", *state.imaginary_memory);
    write_episode_log_csv(dir / "episodes.csv", state.logs);
    std::ofstream(dir / "error.txt") << what << '\n' << format_train_config(state.config);
  } catch (const std::exception&) {
    // The original failure is what the caller needs to see.
  }
}

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double value() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

}  // namespace

bool identical_except_time(const EpisodeLog& a, const EpisodeLog& b) {
  return same_trajectory(a, b) && a.model_nll == b.model_nll && a.reward_loss == b.reward_loss &&
         a.done_loss == b.done_loss;
}

bool same_trajectory(const EpisodeLog& a, const EpisodeLog& b) {
  return a.episode == b.episode && a.steps == b.steps && a.total_reward == b.total_reward &&
         a.terminal_kind == b.terminal_kind && a.epsilon == b.epsilon && a.controller_loss == b.controller_loss &&
         a.imagined == b.imagined;
}

TrainResult run_training(const TrainConfig& config, const vae::Vae& encoder, const render::FragmentPool& pool,
                         const TrainHooks& hooks) {
  validate(config);
  const Rng root(config.seed);
  TrainResult res;
  res.config = config;
  res.controller = make_controller(config, root);
  {
    Rng init = root.fork(streams::kInit).fork(kModelInit);
    world::WorldModelConfig mc;
    mc.learning_rate = config.model_lr;
    res.model = std::make_unique<world::WorldModel>(mc, init);
  }
  res.real_memory = std::make_unique<dqn::RealMemory>(config.real_capacity);
  res.imaginary_memory = std::make_unique<dqn::ImaginaryMemory>(config.imaginary_capacity);

  render::ObservedEnvironment env(pool, config.variant, root.fork(streams::kEnvironment));
  Rng controller_rng = root.fork(streams::kController);
  Rng model_rng = root.fork(streams::kModel);
  Rng imagination_rng = root.fork(streams::kImagination);
  auto schedule = make_schedule(config);
  const std::size_t i_start = config.effective_i_start();

  dqn::Controller& controller = *res.controller;
  world::WorldModel& model = *res.model;
  auto& counters = res.counters;

  for (std::size_t e = 0; e < config.num_episodes; ++e) {
    const auto started = Clock::now();
    EpisodeLog log;
    log.episode = e;
    log.epsilon = schedule.value();
    const double epsilon = log.epsilon;
    Mean nll;
    Mean reward_loss;
    Mean done_loss;
    Mean controller_loss;

    try {
      vae::LatentGaussian g = encoder.encode(env.reset().pixels);
      while (!env.episode_over()) {
        const int action = controller.select_action(g.mu, epsilon, controller_rng);
        const auto fb = env.step(env::ActionId(action));
        const vae::LatentGaussian g_next = encoder.encode(fb.observation.pixels);
        res.real_memory->push(make_transition(g, action, g_next, fb));
        ++counters.env_steps;
        ++counters.real_insertions;

        if (config.n_e > 0) {
          const auto ml =
              world::train_model_step(model, *res.real_memory, config.n_e, config.model_batch, model_rng,
                                      config.resample_latents);
          counters.model_updates += config.n_e;
          nll.add(ml.nll);
          reward_loss.add(ml.reward);
          done_loss.add(ml.done);
        }
        for (std::size_t i = 0; i < config.n_r; ++i) {
          const auto cs = dqn::train_controller_step(controller, *res.real_memory, config.controller_batch,
                                                     config.gamma, controller_rng);
          if (cs.trained) {
            ++counters.controller_updates_real;
            controller_loss.add(cs.loss);
          }
        }
        if (config.augmented && e >= i_start) {
          const world::RolloutPolicy policy = [&controller, epsilon](const vae::Latent& z, Rng& rng) {
            return controller.select_action(z, epsilon, rng);
          };
          const auto batch = world::generate_rollouts(model, g, policy, config.i_b, config.i_d, imagination_rng);
          ++counters.rollout_calls;
          counters.divergence_events += batch.divergence_events;
          for (const auto& rollout : batch.rollouts) {
            for (const auto& t : rollout.steps) {
              res.imaginary_memory->push(t);
              ++counters.imaginary_insertions;
              ++log.imagined;
            }
          }
          if (log.imagined > 0 && counters.first_imagined_episode == UINT64_MAX) counters.first_imagined_episode = e;
          for (std::size_t i = 0; i < config.n_i; ++i) {
            const auto cs = dqn::train_controller_step(controller, *res.imaginary_memory, config.controller_batch,
                                                       config.gamma, imagination_rng);
            if (cs.trained) {
              ++counters.controller_updates_imaginary;
              controller_loss.add(cs.loss);
            }
          }
        }

        ++log.steps;
        log.total_reward += fb.reward;
        log.terminal_kind = fb.terminal_kind;
        g = g_next;
      }
    } catch (const NumericError& err) {
      std::ostringstream msg;
      msg << "training diverged in episode " << e << " after " << counters.env_steps << " environment steps (epsilon "
          << epsilon << ", mean model NLL so far " << nll.value() << ", controller loss " << controller_loss.value()
          << "): " << err.what();
      if (!hooks.diagnostics_dir.empty()) msg << "; state dumped to " << hooks.diagnostics_dir.string();
      dump_diagnostics(hooks.diagnostics_dir, res, msg.str());
      throw NumericError(msg.str());
    }

    schedule.advance();
    log.model_nll = nll.value();
    log.reward_loss = reward_loss.value();
    log.done_loss = done_loss.value();
    log.controller_loss = controller_loss.value();
    log.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    res.logs.push_back(log);
    if (hooks.on_episode) hooks.on_episode(log);
    if (config.checkpoint_interval > 0 && (e + 1) % config.checkpoint_interval == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(e + 1, res);
    }
  }
  return res;
}

TrainResult run_baseline_dqn(const TrainConfig& config, const vae::Vae& encoder, const render::FragmentPool& pool,
                             const TrainHooks& hooks) {
  validate(config);
  const Rng root(config.seed);
  TrainResult res;
  res.config = config;
  res.config.augmented = false;
  res.controller = make_controller(config, root);
  res.real_memory = std::make_unique<dqn::RealMemory>(config.real_capacity);
  res.imaginary_memory = std::make_unique<dqn::ImaginaryMemory>(config.imaginary_capacity);
  render::ObservedEnvironment env(pool, config.variant, root.fork(streams::kEnvironment));
  Rng rng = root.fork(streams::kController);
  auto schedule = make_schedule(config);

  for (std::size_t e = 0; e < config.num_episodes; ++e) {
    const auto started = Clock::now();
    EpisodeLog log;
    log.episode = e;
    log.epsilon = schedule.value();
    Mean loss;
    vae::LatentGaussian g = encoder.encode(env.reset().pixels);
    while (!env.episode_over()) {
      const int action = res.controller->select_action(g.mu, log.epsilon, rng);
      const auto fb = env.step(env::ActionId(action));
      const auto g_next = encoder.encode(fb.observation.pixels);
      res.real_memory->push(make_transition(g, action, g_next, fb));
      ++res.counters.env_steps;
      ++res.counters.real_insertions;
      for (std::size_t i = 0; i < config.n_r; ++i) {
        const auto step = dqn::train_controller_step(*res.controller, *res.real_memory, config.controller_batch,
                                                     config.gamma, rng);
        if (step.trained) {
          ++res.counters.controller_updates_real;
          loss.add(step.loss);
        }
      }
      ++log.steps;
      log.total_reward += fb.reward;
      log.terminal_kind = fb.terminal_kind;
      g = g_next;
    }
    schedule.advance();
    log.controller_loss = loss.value();
    log.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    res.logs.push_back(log);
    if (hooks.on_episode) hooks.on_episode(log);
    if (config.checkpoint_interval > 0 && (e + 1) % config.checkpoint_interval == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(e + 1, res);
    }
  }
  return res;
}

std::vector<PairedResult> run_baseline_and_augmented(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                                                     const vae::Vae& encoder, const render::FragmentPool& pool,
                                                     std::size_t threads, const PairHook& hooks) {
  if (seeds.empty()) throw ConfigError("run_baseline_and_augmented needs at least one seed");
  validate(config);
  std::vector<PairedResult> results(seeds.size());
  const std::size_t jobs = seeds.size() * 2;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t pair = job / 2;
      const bool augmented = job % 2 == 1;
      TrainConfig c = config;
      c.seed = seeds[pair];
      c.augmented = augmented;
      try {
        const TrainHooks h = hooks ? hooks(c.seed, augmented) : TrainHooks{};
        // The baseline arm takes the model-free path; run_training(augmented=false)
        // yields the same controller trajectory.
        TrainResult r = augmented ? run_training(c, encoder, pool, h) : run_baseline_dqn(c, encoder, pool, h);
        results[pair].seed = c.seed;
        (augmented ? results[pair].augmented : results[pair].baseline) = std::move(r);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t i = 0; i < n_threads; ++i) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void write_episode_log_csv(const std::filesystem::path& path, std::span<const EpisodeLog> logs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "episode,steps,total_reward,terminal_kind,epsilon,wall_seconds,model_nll,reward_loss,done_loss,"
         "controller_loss,imagined\n";
  out.precision(9);
  for (const auto& l : logs) {
    out << l.episode << ',' << l.steps << ',' << l.total_reward << ',' << env::terminal_kind_name(l.terminal_kind)
        << ',' << l.epsilon << ',' << l.wall_seconds << ',' << l.model_nll << ',' << l.reward_loss << ','
        << l.done_loss << ',' << l.controller_loss << ',' << l.imagined << '\n';
  }
}

}  // namespace imagine::trainer
