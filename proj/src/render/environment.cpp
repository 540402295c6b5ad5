#include "imagine/render/environment.hpp"

#include "imagine/core/errors.hpp"

namespace imagine::render {

ObservedEnvironment::ObservedEnvironment(const FragmentPool& pool, env::Variant variant, Rng rng)
    : pool_(&pool), variant_(variant), rng_(std::move(rng)) {}

Observation ObservedEnvironment::reset() { return reset_to(env::reset(rng_, variant_)); }

Observation ObservedEnvironment::reset_to(const env::Macrostate& state) {
  if (env::classify(state, variant_) != env::StateClass::Neutral) {
    throw UsageError("episodes must start from a neutral state, got " + env::to_string(state));
  }
  state_ = state;
  steps_ = 0;
  over_ = false;
  return render(state_, *pool_, rng_);
}

ObservedEnvironment::Feedback ObservedEnvironment::step(env::ActionId action) {
  if (over_) throw UsageError("step() after the episode ended; call reset()");
  const auto outcome = env::step(state_, action, steps_, variant_);
  state_ = outcome.next;
  ++steps_;
  over_ = outcome.terminal;
  Feedback fb;
  fb.observation = render(state_, *pool_, rng_);
  fb.reward = static_cast<float>(outcome.reward);
  fb.terminal_kind = outcome.terminal_kind;
  fb.timeout = outcome.terminal_kind == env::TerminalKind::Timeout;
  fb.done = outcome.terminal && !fb.timeout;
  return fb;
}

}  // namespace imagine::render
