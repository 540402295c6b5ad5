#include "imagine/eval/planner.hpp"

#include <cmath>

#include "imagine/eval/evaluate.hpp"
#include "imagine/render/png.hpp"

namespace imagine::eval {

Plan plan_in_latent(const dqn::Controller& controller, const world::WorldModel& model, const vae::Vae& encoder,
                    const render::Observation& obs0, const env::Macrostate& initial, std::size_t max_len, Rng& rng) {
  Plan plan;
  plan.initial = initial;
  vae::Latent z = encoder.encode(obs0.pixels).mu;
  plan.trajectory.push_back(z);
  float last_reward = 0.0F;
  for (std::size_t step = 0; step < max_len; ++step) {
    const int action = controller.greedy_action(z);
    const auto sample = world::mdn_sample(model.mdn_forward(z, action), rng);
    vae::Latent next{};
    bool finite = true;
    for (std::size_t j = 0; j < vae::kLatentDim; ++j) {
      next[j] = sample[j];
      finite = finite && std::isfinite(next[j]);
    }
    if (!finite) {
      plan.diverged = true;
      plan.predicted_success = false;
      return plan;
    }
    plan.actions.push_back(action);
    plan.trajectory.push_back(next);
    z = next;
    last_reward = model.predict_reward(z);
    if (model.predict_done(z) > 0.5F) break;
  }
  plan.predicted_success = last_reward > 0.0F;
  return plan;
}

PlanExecution execute_plan(const Plan& plan, env::Variant variant) {
  PlanExecution out;
  env::Macrostate s = plan.initial;
  for (int a : plan.actions) {
    const auto step = env::step(s, env::ActionId(a), static_cast<int>(out.executed), variant);
    ++out.executed;
    s = step.next;
    if (step.terminal) {
      out.terminal_kind = step.terminal_kind;
      out.reached_goal = step.terminal_kind == env::TerminalKind::Goal;
      break;
    }
  }
  return out;
}

std::vector<PlanTrial> planning_trials(const dqn::Controller& controller, const world::WorldModel& model,
                                       const vae::Vae& encoder, const render::FragmentPool& pool,
                                       env::Variant variant, std::size_t n_trials, Rng& rng) {
  std::vector<PlanTrial> trials;
  trials.reserve(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) {
    PlanTrial t;
    const env::Macrostate initial = env::reset(rng, variant);
    const auto obs = render::render(initial, pool, rng);
    t.plan = plan_in_latent(controller, model, encoder, obs, initial,
                            static_cast<std::size_t>(env::kMaxEpisodeSteps), rng);
    t.execution = execute_plan(t.plan, variant);
    if (const auto best = bfs_optimal_plan(initial, variant)) t.optimal_length = best->size();
    trials.push_back(std::move(t));
  }
  return trials;
}

void export_plan_png(const std::filesystem::path& path, const Plan& plan, const vae::Vae& vae) {
  std::vector<render::Observation> frames;
  frames.reserve(plan.trajectory.size());
  for (const auto& z : plan.trajectory) frames.push_back(vae.decode(z));
  render::write_observation_png(path, frames);
}

ProbeResult generalization_probe(const world::WorldModel& model, const vae::Vae& vae, const render::FragmentPool& pool,
                                 env::Variant variant, std::size_t n_trials, Rng& rng) {
  std::vector<env::Macrostate> terminals;
  for (const auto& [state, cls] : env::enumerate_states(variant)) {
    if (cls != env::StateClass::Neutral) terminals.push_back(state);
  }
  ProbeResult result;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n_trials; ++i) {
    ProbeTrial t;
    t.seed_state = terminals[rng.index(terminals.size())];
    t.action = static_cast<int>(rng.index(env::kNumActions));
    t.truth = env::apply_action(t.seed_state, env::ActionId(t.action));
    const auto obs = render::render(t.seed_state, pool, rng);
    const auto mu = vae.encode(obs.pixels).mu;
    const auto sample = world::mdn_sample(model.mdn_forward(mu, t.action), rng);
    vae::Latent z{};
    std::copy(sample.begin(), sample.end(), z.begin());
    t.predicted = render::try_classify_observation(vae.decode(z));
    if (t.correct()) ++correct;
    result.trials.push_back(t);
  }
  result.accuracy = n_trials == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n_trials);
  return result;
}

double probe_chance_level() { return 1.0 / static_cast<double>(env::kNumActions); }

}  // namespace imagine::eval
