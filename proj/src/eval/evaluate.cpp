#include "imagine/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include "imagine/core/errors.hpp"
#include "imagine/render/environment.hpp"

namespace imagine::eval {

std::optional<std::vector<int>> bfs_optimal_plan(const env::Macrostate& state, env::Variant variant) {
  const int start = state.index();
  if (env::classify(state, variant) != env::StateClass::Neutral) {
    throw UsageError("bfs_optimal_plan: start state must be neutral");
  }
  std::array<int, env::kNumStates> parent{};
  std::array<int, env::kNumStates> via{};
  parent.fill(-2);
  parent[static_cast<std::size_t>(start)] = -1;
  std::deque<int> frontier{start};
  int goal = -1;
  while (!frontier.empty() && goal < 0) {
    const int s = frontier.front();
    frontier.pop_front();
    const auto current = env::Macrostate::from_index(s);
    for (int a = 0; a < env::kNumActions; ++a) {
      const auto next = env::apply_action(current, env::ActionId(a));
      const int n = next.index();
      if (parent[static_cast<std::size_t>(n)] != -2) continue;
      const auto cls = env::classify(next, variant);
      if (cls == env::StateClass::Illegal) continue;
      parent[static_cast<std::size_t>(n)] = s;
      via[static_cast<std::size_t>(n)] = a;
      if (cls == env::StateClass::Goal) {
        goal = n;
        break;
      }
      frontier.push_back(n);
    }
  }
  if (goal < 0) return std::nullopt;
  std::vector<int> plan;
  for (int s = goal; parent[static_cast<std::size_t>(s)] != -1; s = parent[static_cast<std::size_t>(s)]) {
    plan.push_back(via[static_cast<std::size_t>(s)]);
  }
  std::reverse(plan.begin(), plan.end());
  return plan;
}

std::array<int, env::kNumStates> bfs_plan_lengths(env::Variant variant) {
  std::array<int, env::kNumStates> lengths{};
  lengths.fill(-1);
  for (const auto& s : env::neutral_states(variant)) {
    if (const auto plan = bfs_optimal_plan(s, variant)) {
      lengths[static_cast<std::size_t>(s.index())] = static_cast<int>(plan->size());
    }
  }
  return lengths;
}

int uniform_random_action(const env::Macrostate&, Rng& rng) { return static_cast<int>(rng.index(env::kNumActions)); }

int bfs_oracle_action(const env::Macrostate& state, env::Variant variant) {
  const auto plan = bfs_optimal_plan(state, variant);
  if (!plan || plan->empty()) throw UsageError("bfs_oracle_action: no plan from " + env::to_string(state));
  return plan->front();
}

double fsm_success_rate(const StatePolicy& policy, env::Variant variant, std::size_t n_episodes, Rng& rng) {
  if (n_episodes == 0) return 0.0;
  std::size_t successes = 0;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    env::Macrostate s = env::reset(rng, variant);
    for (int t = 0; t < env::kMaxEpisodeSteps; ++t) {
      const auto out = env::step(s, env::ActionId(policy(s, rng)), t, variant);
      s = out.next;
      if (out.terminal) {
        if (out.terminal_kind == env::TerminalKind::Goal) ++successes;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(successes) / static_cast<double>(n_episodes);
}

double evaluate(const dqn::Controller& controller, const vae::Vae& encoder, const render::FragmentPool& pool,
                env::Variant variant, std::size_t n_episodes, const Rng& rng) {
  if (n_episodes == 0) return 0.0;
  constexpr std::size_t kLockstep = 256;
  std::size_t successes = 0;
  for (std::size_t first = 0; first < n_episodes; first += kLockstep) {
    const std::size_t count = std::min(kLockstep, n_episodes - first);
    std::vector<render::ObservedEnvironment> envs;
    std::vector<render::Observation> obs;
    envs.reserve(count);
    obs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      envs.emplace_back(pool, variant, rng.fork(first + i));
      obs.push_back(envs.back().reset());
    }
    std::vector<std::size_t> live(count);
    for (std::size_t i = 0; i < count; ++i) live[i] = i;
    while (!live.empty()) {
      nn::Tensor images = nn::Tensor::matrix(live.size(), render::kPixels);
      for (std::size_t r = 0; r < live.size(); ++r) {
        std::copy(obs[live[r]].pixels.begin(), obs[live[r]].pixels.end(), images.row(r).begin());
      }
      const auto encoded = encoder.encode_batch(images);
      const nn::Tensor q = controller.q_values_batch(encoded.mu);
      std::vector<std::size_t> still_live;
      for (std::size_t r = 0; r < live.size(); ++r) {
        auto& e = envs[live[r]];
        const auto fb = e.step(env::ActionId(dqn::argmax_action(q.row(r))));
        if (e.episode_over()) {
          if (fb.terminal_kind == env::TerminalKind::Goal) ++successes;
        } else {
          obs[live[r]] = fb.observation;
          still_live.push_back(live[r]);
        }
      }
      live = std::move(still_live);
    }
  }
  return 100.0 * static_cast<double>(successes) / static_cast<double>(n_episodes);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double percentage_increase(double baseline, double augmented) {
  if (baseline == 0.0) return augmented == 0.0 ? 0.0 : INFINITY;
  return (augmented - baseline) / baseline * 100.0;
}

void write_eval_table_csv(const std::filesystem::path& path, std::span<const EvalRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "variant,episodes,base_mean,base_sd,augmented_mean,augmented_sd,increase_pct\n";
  out.precision(6);
  for (const auto& r : rows) {
    out << env::variant_name(r.variant) << ',' << r.episodes << ',' << r.baseline_mean() << ','
        << sample_sd(r.baseline) << ',' << r.augmented_mean() << ',' << sample_sd(r.augmented) << ','
        << r.increase() << '\n';
  }
}

void write_eval_curve_csv(const std::filesystem::path& path, std::span<const EvalRow> rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "variant,arm,agent,episodes,success_pct\n";
  out.precision(6);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.baseline.size(); ++i) {
      out << env::variant_name(r.variant) << ",baseline," << i << ',' << r.episodes << ',' << r.baseline[i] << '\n';
    }
    for (std::size_t i = 0; i < r.augmented.size(); ++i) {
      out << env::variant_name(r.variant) << ",augmented," << i << ',' << r.episodes << ',' << r.augmented[i]
          << '\n';
    }
  }
}

}  // namespace imagine::eval
