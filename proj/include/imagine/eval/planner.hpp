#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/dqn/controller.hpp"
#include "imagine/env/puzzle.hpp"
#include "imagine/render/render.hpp"
#include "imagine/vae/vae.hpp"
#include "imagine/world/world_model.hpp"

namespace imagine::eval {

struct Plan {
  env::Macrostate initial;
  std::vector<int> actions;
  std::vector<vae::Latent> trajectory;  // actions.size() + 1 latents, starting at mu(obs0)
  bool predicted_success = false;       // r-network sign at the final imagined state
  bool diverged = false;
};

// Greedy closed-loop rollout in the world model from the encoded initial observation.
Plan plan_in_latent(const dqn::Controller& controller, const world::WorldModel& model, const vae::Vae& encoder,
                    const render::Observation& obs0, const env::Macrostate& initial, std::size_t max_len, Rng& rng);

struct PlanExecution {
  bool reached_goal = false;
  std::size_t executed = 0;  // actions applied before a terminal or the end of the plan
  env::TerminalKind terminal_kind = env::TerminalKind::None;
};

// Applies the plan's actions to the exact FSM from plan.initial.
PlanExecution execute_plan(const Plan& plan, env::Variant variant);

struct PlanTrial {
  Plan plan;
  PlanExecution execution;
  std::optional<std::size_t> optimal_length;
  bool optimal() const { return optimal_length && plan.actions.size() == *optimal_length; }
};

// Initial states uniform over neutral states; each is rendered once, planned and executed.
std::vector<PlanTrial> planning_trials(const dqn::Controller& controller, const world::WorldModel& model,
                                       const vae::Vae& encoder, const render::FragmentPool& pool,
                                       env::Variant variant, std::size_t n_trials, Rng& rng);

// Decodes the imagined trajectory into a PNG strip sequence.
void export_plan_png(const std::filesystem::path& path, const Plan& plan, const vae::Vae& vae);

struct ProbeTrial {
  env::Macrostate seed_state;
  int action = 0;
  env::Macrostate truth;
  std::optional<env::Macrostate> predicted;  // nullopt when the decoded image is ambiguous
  bool correct() const { return predicted && *predicted == truth; }
};

struct ProbeResult {
  std::vector<ProbeTrial> trials;
  double accuracy = 0.0;  // fraction in [0, 1]
};

// Seeds the model with the encoding of a random terminal state (goal or illegal),
// applies a random action through the MDN, decodes the sample and classifies it.
// The model is only read.
ProbeResult generalization_probe(const world::WorldModel& model, const vae::Vae& vae, const render::FragmentPool& pool,
                                 env::Variant variant, std::size_t n_trials, Rng& rng);

// Chance of naming the right successor when guessing uniformly among a state's six
// successors, which are always distinct.
double probe_chance_level();

}  // namespace imagine::eval
