#pragma once

#include "imagine/core/rng.hpp"
#include "imagine/env/puzzle.hpp"
#include "imagine/render/render.hpp"

namespace imagine::render {

// The puzzle as the agent experiences it: every transition emits a freshly
// rendered observation, a reward and a terminal signal. The macrostate stays
// hidden behind hidden_state(), which only evaluation code may consult.
class ObservedEnvironment {
 public:
  struct Feedback {
    Observation observation;
    float reward = 0.0F;
    bool done = false;     // goal or illegal state reached
    bool timeout = false;  // episode truncated by the step cap
    env::TerminalKind terminal_kind = env::TerminalKind::None;
  };

  ObservedEnvironment(const FragmentPool& pool, env::Variant variant, Rng rng);

  Observation reset();
  // Starts an episode from a given state (planning demos, probes).
  Observation reset_to(const env::Macrostate& state);
  Feedback step(env::ActionId action);

  bool episode_over() const noexcept { return over_; }
  int steps_taken() const noexcept { return steps_; }
  env::Variant variant() const noexcept { return variant_; }
  const env::Macrostate& hidden_state() const noexcept { return state_; }

 private:
  const FragmentPool* pool_;
  env::Variant variant_;
  Rng rng_;
  env::Macrostate state_;
  int steps_ = 0;
  bool over_ = true;
};

}  // namespace imagine::render
