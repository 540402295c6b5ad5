#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/dqn/controller.hpp"
#include "imagine/env/puzzle.hpp"
#include "imagine/render/render.hpp"
#include "imagine/vae/vae.hpp"

namespace imagine::eval {

// Shortest goal-reaching action sequence that never enters an illegal state;
// lowest action index wins ties. nullopt when no goal is reachable.
std::optional<std::vector<int>> bfs_optimal_plan(const env::Macrostate& state, env::Variant variant);

// Optimal plan length per macrostate index (-1 where none exists or the state is not neutral).
std::array<int, env::kNumStates> bfs_plan_lengths(env::Variant variant);

// Policy over the exact FSM state, for oracle and random baselines.
using StatePolicy = std::function<int(const env::Macrostate& state, Rng& rng)>;

int uniform_random_action(const env::Macrostate& state, Rng& rng);
int bfs_oracle_action(const env::Macrostate& state, env::Variant variant);

// Percentage of episodes ending at a goal, initial states uniform over neutral states.
double fsm_success_rate(const StatePolicy& policy, env::Variant variant, std::size_t n_episodes, Rng& rng);

// Greedy (epsilon = 0) controller on rendered observations. Episodes run in
// lockstep so observations are encoded in batches; episode i draws from rng.fork(i).
double evaluate(const dqn::Controller& controller, const vae::Vae& encoder, const render::FragmentPool& pool,
                env::Variant variant, std::size_t n_episodes, const Rng& rng);

double mean(std::span<const double> values);
double sample_sd(std::span<const double> values);  // n - 1 denominator; 0 for fewer than two values
double percentage_increase(double baseline, double augmented);

struct EvalRow {
  env::Variant variant = env::Variant::Easy;
  std::size_t episodes = 0;  // training episodes at this checkpoint
  std::vector<double> baseline;   // per-agent success %
  std::vector<double> augmented;

  double baseline_mean() const { return mean(baseline); }
  double augmented_mean() const { return mean(augmented); }
  double increase() const { return percentage_increase(baseline_mean(), augmented_mean()); }
};

// episodes,base_mean,base_sd,augmented_mean,augmented_sd,increase_pct
void write_eval_table_csv(const std::filesystem::path& path, std::span<const EvalRow> rows);
// variant,arm,agent,episodes,success_pct (one row per agent per checkpoint)
void write_eval_curve_csv(const std::filesystem::path& path, std::span<const EvalRow> rows);

}  // namespace imagine::eval
