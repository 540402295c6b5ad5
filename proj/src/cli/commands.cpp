#include "imagine/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imagine/cli/manifest.hpp"
#include "imagine/core/errors.hpp"
#include "imagine/eval/evaluate.hpp"
#include "imagine/eval/planner.hpp"
#include "imagine/render/dataset.hpp"
#include "imagine/simd/kernels.hpp"
#include "imagine/trainer/trainer.hpp"

namespace imagine::cli {

namespace fs = std::filesystem;

std::filesystem::path output_root() {
  if (const char* env = std::getenv("IMAGINE_RL_OUT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

namespace {

constexpr const char* kTrainFile = "train.obsd";
constexpr const char* kTestFile = "test.obsd";
constexpr const char* kVaeFile = "vae.nnck";
constexpr const char* kControllerFile = "controller.nnck";
constexpr const char* kModelFile = "world_model.nnck";

fs::path resolve_out(const std::string& flag, const char* default_leaf) {
  return flag.empty() ? output_root() / default_leaf : fs::path(flag);
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir / kManifestName) && !force) {
    throw ConfigError("output directory '" + dir.string() + "' already holds a run; pass --force to overwrite");
  }
  fs::create_directories(dir);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated list of integers, got '" + text + "'");
    }
  }
  return out;
}

struct LoadedVae {
  RunManifest manifest;
  std::unique_ptr<vae::Vae> model;
  std::uint64_t pool_seed = 0;
  fs::path checkpoint;
};

LoadedVae load_vae(const fs::path& dir) {
  LoadedVae out;
  out.manifest = load_verified_manifest(dir, "train-vae");
  vae::VaeArchitecture arch;
  arch.hidden = parse_size_list(out.manifest.config_value("hidden"));
  Rng init(0);
  out.model = std::make_unique<vae::Vae>(arch, init);
  out.checkpoint = dir / kVaeFile;
  out.model->load(out.checkpoint);
  out.pool_seed = std::stoull(out.manifest.config_value("pool_seed"));
  return out;
}

struct LoadedAgent {
  RunManifest manifest;
  trainer::TrainConfig config;
  LoadedVae vae;
  std::unique_ptr<dqn::Controller> controller;
  std::unique_ptr<world::WorldModel> model;
};

LoadedAgent load_agent(const fs::path& dir) {
  LoadedAgent out;
  out.manifest = load_verified_manifest(dir, "train-agent");
  for (const auto& [k, v] : out.manifest.config) {
    if (k != "vae_dir") trainer::set_config_value(out.config, k, v);
  }
  out.vae = load_vae(out.manifest.config_value("vae_dir"));
  Rng init(0);
  out.controller = std::make_unique<dqn::Controller>(dqn::ControllerConfig{}, init);
  out.controller->load(dir / kControllerFile);
  if (fs::exists(dir / kModelFile)) {
    out.model = std::make_unique<world::WorldModel>(world::WorldModelConfig{}, init);
    out.model->load(dir / kModelFile);
  }
  return out;
}

// Flags shared by commands that build a TrainConfig; applied over the config file.
struct TrainFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string variant = "easy";
  std::size_t episodes = 500;
  bool augmented = true;
  long long i_start = -1;
  bool paper_scale = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* episodes_opt = nullptr;
  CLI::Option* augmented_opt = nullptr;
  CLI::Option* i_start_opt = nullptr;

  void add_to(CLI::App& cmd, bool with_seed_and_augmented) {
    cmd.add_option("--config", config_path, "key=value training config file (flags override it)");
    if (with_seed_and_augmented) {
      seed_opt = cmd.add_option("--seed", seed, "Root seed");
      augmented_opt = cmd.add_option("--augmented", augmented, "Use imagined rollouts (false = baseline DQN)");
    }
    variant_opt = cmd.add_option("--variant", variant, "Goal variant: easy|hard");
    episodes_opt = cmd.add_option("--episodes", episodes, "Training episodes (paper: 2000-6000)");
    i_start_opt = cmd.add_option("--i-start", i_start, "Episode at which rollouts begin; -1 = 25% of episodes (paper: 1000)");
    cmd.add_flag("--paper-scale", paper_scale, "Model updates 16 per step on batches of 512");
  }

  trainer::TrainConfig resolve() const {
    trainer::TrainConfig c;
    if (!config_path.empty()) c = trainer::read_train_config(config_path);
    if (paper_scale) trainer::apply_paper_scale(c);
    if (seed_opt != nullptr && seed_opt->count() > 0) c.seed = seed;
    if (variant_opt->count() > 0) c.variant = env::parse_variant(variant);
    if (episodes_opt->count() > 0) c.num_episodes = episodes;
    if (augmented_opt != nullptr && augmented_opt->count() > 0) c.augmented = augmented;
    if (i_start_opt->count() > 0) c.i_start = i_start;
    trainer::validate(c);
    return c;
  }
};

int cmd_render_dataset(std::size_t n_train, std::size_t n_test, std::uint64_t seed, std::uint64_t pool_seed,
                       const fs::path& out, bool force) {
  prepare_out_dir(out, force);
  const render::FragmentPool pool(pool_seed);
  const auto data = render::build_dataset(n_train, n_test, pool, Rng(seed).fork(streams::kDataset));
  render::write_image_set(out / kTrainFile, data.train);
  render::write_image_set(out / kTestFile, data.test);
  RunManifest m;
  m.subcommand = "render-dataset";
  m.version = version_string();
  m.seed = seed;
  m.config = {{"n_train", std::to_string(n_train)},
              {"n_test", std::to_string(n_test)},
              {"pool_seed", std::to_string(pool_seed)}};
  write_manifest(out, m, {kTrainFile, kTestFile});
  std::cout << "wrote " << n_train << " train / " << n_test << " test images to " << out.string() << '\n';
  return kExitOk;
}

int cmd_train_vae(const fs::path& data_dir, const vae::VaeConfig& config, std::uint64_t seed, const fs::path& out,
                  bool force) {
  const RunManifest data = load_verified_manifest(data_dir, "render-dataset");
  const auto train = render::read_image_set(data_dir / kTrainFile);
  const auto test = render::read_image_set(data_dir / kTestFile);
  prepare_out_dir(out, force);

  const Rng root(seed);
  Rng init = root.fork(streams::kInit);
  Rng rng = root.fork(streams::kVae);
  vae::Vae model(config.architecture, init);
  std::size_t saturated = 0;
  const auto curve = vae::train_vae(model, train, test, config, rng, [&](const vae::EpochStats& s) {
    saturated += s.saturated;
    std::cout << "epoch " << s.epoch << " train " << s.train_loss << " test " << s.test_loss << " bce " << s.bce
              << " kl " << s.kl << std::endl;
  });
  if (saturated > 0) {
    std::cerr << "warning: " << saturated << " reconstruction values saturated and were clamped in the BCE\n";
  }
  model.save(out / kVaeFile);
  vae::write_loss_curve_csv(out / "loss_curve.csv", curve);

  RunManifest m;
  m.subcommand = "train-vae";
  m.version = version_string();
  m.seed = seed;
  m.config = {{"beta", std::to_string(config.beta)},
              {"learning_rate", std::to_string(config.learning_rate)},
              {"batch_size", std::to_string(config.batch_size)},
              {"epochs", std::to_string(config.epochs)},
              {"hidden", join(config.architecture.hidden)},
              {"pool_seed", data.config_value("pool_seed")},
              {"data_dir", data_dir.string()}};
  m.inputs = {input_ref(data_dir / kTrainFile), input_ref(data_dir / kTestFile)};
  write_manifest(out, m, {kVaeFile, "loss_curve.csv"});
  return kExitOk;
}

int cmd_train_agent(const fs::path& vae_dir, const trainer::TrainConfig& config, const fs::path& out, bool force) {
  const LoadedVae v = load_vae(vae_dir);
  prepare_out_dir(out, force);
  const render::FragmentPool pool(v.pool_seed);

  trainer::TrainHooks hooks;
  hooks.diagnostics_dir = out / "divergence";
  hooks.on_episode = [&](const trainer::EpisodeLog& log) {
    if ((log.episode + 1) % 50 == 0 || log.episode + 1 == config.num_episodes) {
      std::cout << "episode " << log.episode + 1 << "/" << config.num_episodes << " reward " << log.total_reward
                << " outcome " << env::terminal_kind_name(log.terminal_kind) << " eps " << log.epsilon << std::endl;
    }
  };
  hooks.on_checkpoint = [&](std::size_t done, const trainer::TrainResult& state) {
    const fs::path dir = out / "checkpoints" / ("ep_" + std::to_string(done));
    fs::create_directories(dir);
    state.controller->save(dir / kControllerFile);
    if (state.model) state.model->save(dir / kModelFile);
    dqn::write_memory(dir / "real_memory.rply", *state.real_memory);
    dqn::write_memory(dir / "imaginary_memory.rply", *state.imaginary_memory);
  };
  const auto result = trainer::run_training(config, *v.model, pool, hooks);
  result.controller->save(out / kControllerFile);
  result.model->save(out / kModelFile);
  dqn::write_memory(out / "real_memory.rply", *result.real_memory);
  dqn::write_memory(out / "imaginary_memory.rply", *result.imaginary_memory);
  trainer::write_episode_log_csv(out / "episodes.csv", result.logs);

  RunManifest m;
  m.subcommand = "train-agent";
  m.version = version_string();
  m.seed = config.seed;
  for (const auto& [k, val] : trainer::config_entries(config)) m.config[k] = val;
  m.config["vae_dir"] = vae_dir.string();
  m.inputs = {input_ref(v.checkpoint)};
  write_manifest(out, m,
                 {kControllerFile, kModelFile, "real_memory.rply", "imaginary_memory.rply", "episodes.csv"});
  std::cout << "config digest " << trainer::config_digest(config) << '\n';
  return kExitOk;
}

int cmd_eval_agent(const fs::path& agent_dir, std::size_t n_episodes, std::uint64_t seed, const fs::path& out,
                   bool force) {
  const LoadedAgent a = load_agent(agent_dir);
  prepare_out_dir(out, force);
  const render::FragmentPool pool(a.vae.pool_seed);
  const double success = eval::evaluate(*a.controller, *a.vae.model, pool, a.config.variant, n_episodes,
                                        Rng(seed).fork(streams::kEvaluation));
  std::ofstream(out / "eval.csv") << "variant,episodes,augmented,success_pct\n"
                                  << env::variant_name(a.config.variant) << ',' << a.config.num_episodes << ','
                                  << (a.config.augmented ? "true" : "false") << ',' << success << '\n';
  RunManifest m;
  m.subcommand = "eval";
  m.version = version_string();
  m.seed = seed;
  m.config = {{"agent_dir", agent_dir.string()}, {"eval_episodes", std::to_string(n_episodes)}};
  m.inputs = {input_ref(agent_dir / kControllerFile)};
  write_manifest(out, m, {"eval.csv"});
  std::cout << "success " << std::fixed << std::setprecision(2) << success << "% over " << n_episodes
            << " greedy episodes\n";
  return kExitOk;
}

int cmd_eval_pairs(const fs::path& vae_dir, trainer::TrainConfig config, const std::vector<std::size_t>& seeds,
                   std::vector<std::size_t> checkpoints, std::size_t n_episodes, std::size_t threads,
                   const fs::path& out, bool force) {
  const LoadedVae v = load_vae(vae_dir);
  prepare_out_dir(out, force);
  const render::FragmentPool pool(v.pool_seed);
  if (checkpoints.empty()) checkpoints.push_back(config.num_episodes);
  std::sort(checkpoints.begin(), checkpoints.end());
  if (checkpoints.front() == 0) throw ConfigError("checkpoints must be positive episode counts");
  config.num_episodes = checkpoints.back();
  config.checkpoint_interval = std::accumulate(checkpoints.begin(), checkpoints.end(), std::size_t{0},
                                               [](std::size_t a, std::size_t b) { return std::gcd(a, b); });

  std::mutex mutex;
  std::map<std::tuple<std::size_t, bool, std::size_t>, double> scores;
  const std::vector<std::uint64_t> seed_list(seeds.begin(), seeds.end());
  const auto hooks = [&](std::uint64_t seed, bool augmented) {
    trainer::TrainHooks h;
    h.on_checkpoint = [&, seed, augmented](std::size_t done, const trainer::TrainResult& state) {
      if (!std::binary_search(checkpoints.begin(), checkpoints.end(), done)) return;
      const double s = eval::evaluate(*state.controller, *v.model, pool, config.variant, n_episodes,
                                      Rng(seed).fork(streams::kEvaluation));
      const std::lock_guard lock(mutex);
      scores[{static_cast<std::size_t>(seed), augmented, done}] = s;
      std::cout << (augmented ? "augmented" : "baseline") << " seed " << seed << " @" << done << ": " << s << "%"
                << std::endl;
    };
    return h;
  };
  trainer::run_baseline_and_augmented(config, seed_list, *v.model, pool, threads, hooks);

  std::vector<eval::EvalRow> rows;
  for (std::size_t cp : checkpoints) {
    eval::EvalRow row;
    row.variant = config.variant;
    row.episodes = cp;
    for (std::size_t s : seeds) {
      row.baseline.push_back(scores.at({s, false, cp}));
      row.augmented.push_back(scores.at({s, true, cp}));
    }
    rows.push_back(row);
  }
  eval::write_eval_table_csv(out / "table.csv", rows);
  eval::write_eval_curve_csv(out / "curve.csv", rows);

  RunManifest m;
  m.subcommand = "eval";
  m.version = version_string();
  m.seed = seeds.front();
  for (const auto& [k, val] : trainer::config_entries(config)) m.config[k] = val;
  m.config["seeds"] = join(seeds);
  m.config["checkpoints"] = join(checkpoints);
  m.config["eval_episodes"] = std::to_string(n_episodes);
  m.config["vae_dir"] = vae_dir.string();
  m.inputs = {input_ref(v.checkpoint)};
  write_manifest(out, m, {"table.csv", "curve.csv"});

  std::cout << "episodes  base_mean  base_sd  aug_mean  aug_sd  increase%\n" << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    std::cout << r.episodes << "  " << r.baseline_mean() << "  " << eval::sample_sd(r.baseline) << "  "
              << r.augmented_mean() << "  " << eval::sample_sd(r.augmented) << "  " << r.increase() << '\n';
  }
  return kExitOk;
}

std::string action_list(const std::vector<int>& actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    out += (i ? " " : "") + env::action_name(env::ActionId(actions[i]));
  }
  return out.empty() ? "(none)" : out;
}

int cmd_plan(const fs::path& agent_dir, const std::string& state_text, std::size_t trials, std::uint64_t seed,
             const fs::path& out, bool force) {
  const LoadedAgent a = load_agent(agent_dir);
  if (!a.model) throw MissingArtifact((agent_dir / kModelFile).string(), "train-agent");
  prepare_out_dir(out, force);
  const render::FragmentPool pool(a.vae.pool_seed);
  Rng rng = Rng(seed).fork(streams::kEvaluation);
  const env::Variant variant = a.config.variant;

  std::vector<eval::PlanTrial> results;
  if (!state_text.empty()) {
    const auto initial = env::parse_state(state_text);
    if (env::classify(initial, variant) != env::StateClass::Neutral) {
      throw ConfigError("plan: '" + state_text + "' is already terminal in the " +
                        std::string(env::variant_name(variant)) + " variant");
    }
    eval::PlanTrial t;
    t.plan = eval::plan_in_latent(*a.controller, *a.model, *a.vae.model, render::render(initial, pool, rng), initial,
                                  env::kMaxEpisodeSteps, rng);
    t.execution = eval::execute_plan(t.plan, variant);
    if (const auto best = eval::bfs_optimal_plan(initial, variant)) t.optimal_length = best->size();
    results.push_back(std::move(t));
  } else {
    results = eval::planning_trials(*a.controller, *a.model, *a.vae.model, pool, variant, trials, rng);
  }

  std::vector<std::string> outputs{"plans.csv"};
  std::ofstream csv(out / "plans.csv");
  csv << "trial,initial,actions,predicted_success,reached_goal,plan_length,optimal_length,optimal\n";
  std::size_t solved = 0;
  std::size_t solved_optimal = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& t = results[i];
    const auto& plan = t.plan;
    const std::string png = "plan_" + std::to_string(i) + ".png";
    eval::export_plan_png(out / png, plan, *a.vae.model);
    outputs.push_back(png);
    const auto bfs = eval::bfs_optimal_plan(plan.initial, variant);
    solved += t.execution.reached_goal ? 1 : 0;
    solved_optimal += t.execution.reached_goal && t.optimal() ? 1 : 0;
    csv << i << ',' << env::to_string(plan.initial) << ',' << action_list(plan.actions) << ','
        << plan.predicted_success << ',' << t.execution.reached_goal << ',' << plan.actions.size() << ','
        << (t.optimal_length ? static_cast<long long>(*t.optimal_length) : -1) << ',' << t.optimal() << '\n';
    std::cout << env::to_string(plan.initial) << ": " << action_list(plan.actions) << '\n'
              << "  executed: " << (t.execution.reached_goal ? "goal reached" : "goal not reached") << " ("
              << env::terminal_kind_name(t.execution.terminal_kind) << ")\n"
              << "  BFS optimum: " << (bfs ? action_list(*bfs) : "none") << " -> "
              << (t.optimal() && t.execution.reached_goal ? "plan is optimal" : "plan is not optimal") << '\n';
  }
  csv.close();
  if (results.size() > 1) {
    std::cout << solved << "/" << results.size() << " plans reached the goal, " << solved_optimal
              << " of them optimal\n";
  }
  RunManifest m;
  m.subcommand = "plan";
  m.version = version_string();
  m.seed = seed;
  m.config = {{"agent_dir", agent_dir.string()}, {"state", state_text}, {"trials", std::to_string(trials)}};
  m.inputs = {input_ref(agent_dir / kControllerFile), input_ref(agent_dir / kModelFile)};
  write_manifest(out, m, outputs);
  return kExitOk;
}

int cmd_probe(const fs::path& agent_dir, std::size_t trials, std::uint64_t seed, const fs::path& out, bool force) {
  const LoadedAgent a = load_agent(agent_dir);
  if (!a.model) throw MissingArtifact((agent_dir / kModelFile).string(), "train-agent");
  prepare_out_dir(out, force);
  const render::FragmentPool pool(a.vae.pool_seed);
  Rng rng = Rng(seed).fork(streams::kEvaluation);
  const auto result = eval::generalization_probe(*a.model, *a.vae.model, pool, a.config.variant, trials, rng);
  std::ofstream csv(out / "probe.csv");
  csv << "trial,seed_state,action,truth,predicted,correct\n";
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const auto& t = result.trials[i];
    csv << i << ',' << env::to_string(t.seed_state) << ',' << env::action_name(env::ActionId(t.action)) << ','
        << env::to_string(t.truth) << ',' << (t.predicted ? env::to_string(*t.predicted) : "ambiguous") << ','
        << t.correct() << '\n';
  }
  csv.close();
  RunManifest m;
  m.subcommand = "probe";
  m.version = version_string();
  m.seed = seed;
  m.config = {{"agent_dir", agent_dir.string()}, {"trials", std::to_string(trials)}};
  m.inputs = {input_ref(agent_dir / kModelFile)};
  write_manifest(out, m, {"probe.csv"});
  std::cout << "next-state accuracy " << std::fixed << std::setprecision(1) << 100.0 * result.accuracy << "% over "
            << trials << " trials (chance " << 100.0 * eval::probe_chance_level() << "%)\n";
  return kExitOk;
}

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Model-based RL with imagined rollouts on the arrow-cube puzzle"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::size_t threads = 1;
  std::string isa;
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);
  app.add_option("--isa", isa, "Force kernel set: scalar|avx2 (default: best supported)");

  bool force = false;
  std::string out_flag;
  const auto add_common = [&](CLI::App* cmd, const char* leaf) {
    cmd->add_option("--out", out_flag, std::string("Output directory (default: $IMAGINE_RL_OUT or runs, then /") +
                                           leaf + ")");
    cmd->add_flag("--force", force, "Overwrite an existing run in the output directory");
  };

  auto* render_cmd = app.add_subcommand("render-dataset", "Render the observation dataset");
  std::size_t n_train = 20'000;
  std::size_t n_test = 2'000;
  std::uint64_t data_seed = 0;
  std::uint64_t pool_seed = 0;
  render_cmd->add_option("--n-train", n_train, "Training images (paper: 100000)");
  render_cmd->add_option("--n-test", n_test, "Test images (paper: 10000)");
  render_cmd->add_option("--seed", data_seed, "Sampling seed");
  auto* pool_seed_opt = render_cmd->add_option("--pool-seed", pool_seed, "Fragment pool seed (default: --seed)");
  add_common(render_cmd, "dataset");

  auto* vae_cmd = app.add_subcommand("train-vae", "Pretrain the VAE on a rendered dataset");
  vae::VaeConfig vae_config;
  std::string data_dir;
  std::uint64_t vae_seed = 0;
  vae_cmd->add_option("--data", data_dir, "Dataset directory (default: <root>/dataset)");
  vae_cmd->add_option("--epochs", vae_config.epochs, "Epochs (paper: 1000)");
  vae_cmd->add_option("--batch-size", vae_config.batch_size, "Batch size (paper: 2000)");
  vae_cmd->add_option("--beta", vae_config.beta, "KL weight");
  vae_cmd->add_option("--lr", vae_config.learning_rate, "Adam learning rate");
  vae_cmd->add_option("--seed", vae_seed, "Seed");
  add_common(vae_cmd, "vae");

  auto* agent_cmd = app.add_subcommand("train-agent", "Train one agent with the frozen encoder");
  std::string vae_dir;
  TrainFlags agent_flags;
  agent_cmd->add_option("--vae", vae_dir, "VAE directory (default: <root>/vae)");
  agent_flags.add_to(*agent_cmd, true);
  add_common(agent_cmd, "agent");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained agent, or train and compare baseline/augmented pairs");
  std::string agent_dir;
  bool pairs = false;
  std::string seeds_text = "0,1,2";
  std::string checkpoints_text;
  std::size_t eval_episodes = 1000;
  std::uint64_t eval_seed = 0;
  TrainFlags pair_flags;
  eval_cmd->add_option("--agent", agent_dir, "Agent directory (default: <root>/agent)");
  eval_cmd->add_flag("--pairs", pairs, "Train matched baseline/augmented agents and write the comparison table");
  eval_cmd->add_option("--vae", vae_dir, "VAE directory for --pairs (default: <root>/vae)");
  eval_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds for --pairs (paper: 5 agents)");
  eval_cmd->add_option("--checkpoints", checkpoints_text, "Comma-separated episode counts to evaluate (default: --episodes)");
  eval_cmd->add_option("--eval-episodes", eval_episodes, "Greedy test episodes per agent");
  eval_cmd->add_option("--eval-seed", eval_seed, "Seed for single-agent evaluation");
  pair_flags.add_to(*eval_cmd, false);
  add_common(eval_cmd, "eval");

  auto* plan_cmd = app.add_subcommand("plan", "Plan in latent space and execute on the puzzle");
  std::string state_text;
  std::size_t plan_trials = 20;
  std::uint64_t plan_seed = 0;
  plan_cmd->add_option("--agent", agent_dir, "Agent directory (default: <root>/agent)");
  plan_cmd->add_option("--state", state_text, "Initial state, e.g. \"U L D|p0\" (default: random trials)");
  plan_cmd->add_option("--trials", plan_trials, "Random initial states when --state is absent");
  plan_cmd->add_option("--seed", plan_seed, "Seed");
  add_common(plan_cmd, "plan");

  auto* probe_cmd = app.add_subcommand("probe", "Next-state prediction from unseen terminal states");
  std::size_t probe_trials = 20;
  std::uint64_t probe_seed = 0;
  probe_cmd->add_option("--agent", agent_dir, "Agent directory (default: <root>/agent)");
  probe_cmd->add_option("--trials", probe_trials, "Trials");
  probe_cmd->add_option("--seed", probe_seed, "Seed");
  add_common(probe_cmd, "probe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!isa.empty()) {
      const auto requested = isa == "scalar" ? simd::Isa::Scalar
                             : isa == "avx2" ? simd::Isa::Avx2
                                             : throw ConfigError("--isa must be scalar or avx2");
      simd::set_active_isa(requested);
    }
    if (*render_cmd) {
      return cmd_render_dataset(n_train, n_test, data_seed, pool_seed_opt->count() > 0 ? pool_seed : data_seed,
                                resolve_out(out_flag, "dataset"), force);
    }
    if (*vae_cmd) {
      return cmd_train_vae(resolve_out(data_dir, "dataset"), vae_config, vae_seed, resolve_out(out_flag, "vae"), force);
    }
    if (*agent_cmd) {
      return cmd_train_agent(resolve_out(vae_dir, "vae"), agent_flags.resolve(), resolve_out(out_flag, "agent"), force);
    }
    if (*eval_cmd) {
      if (pairs) {
        const auto config = pair_flags.resolve();
        const auto seeds = parse_size_list(seeds_text);
        if (seeds.empty()) throw ConfigError("--seeds needs at least one seed");
        return cmd_eval_pairs(resolve_out(vae_dir, "vae"), config, seeds, parse_size_list(checkpoints_text),
                              eval_episodes, threads, resolve_out(out_flag, "eval"), force);
      }
      return cmd_eval_agent(resolve_out(agent_dir, "agent"), eval_episodes, eval_seed, resolve_out(out_flag, "eval"),
                            force);
    }
    if (*plan_cmd) {
      return cmd_plan(resolve_out(agent_dir, "agent"), state_text, plan_trials, plan_seed, resolve_out(out_flag, "plan"),
                      force);
    }
    if (*probe_cmd) {
      return cmd_probe(resolve_out(agent_dir, "agent"), probe_trials, probe_seed, resolve_out(out_flag, "probe"), force);
    }
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return kExitOther;
}

}  // namespace imagine::cli
