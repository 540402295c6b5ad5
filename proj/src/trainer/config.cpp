#include "imagine/trainer/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "imagine/core/digest.hpp"
#include "imagine/core/errors.hpp"

namespace imagine::trainer {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <class T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string copy(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(copy, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != copy.size() || !std::isfinite(out)) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

std::string format_real(double v) {
  std::ostringstream out;
  out.precision(9);
  out << v;
  return out.str();
}

}  // namespace

void apply_paper_scale(TrainConfig& config) {
  config.n_e = 16;
  config.model_batch = 512;
}

void set_config_value(TrainConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "num_episodes") c.num_episodes = parse_integer<std::size_t>(key, value);
  else if (key == "i_start") c.i_start = parse_integer<long long>(key, value);
  else if (key == "i_d") c.i_d = parse_integer<std::size_t>(key, value);
  else if (key == "i_b") c.i_b = parse_integer<std::size_t>(key, value);
  else if (key == "n_e") c.n_e = parse_integer<std::size_t>(key, value);
  else if (key == "n_r") c.n_r = parse_integer<std::size_t>(key, value);
  else if (key == "n_i") c.n_i = parse_integer<std::size_t>(key, value);
  else if (key == "model_batch") c.model_batch = parse_integer<std::size_t>(key, value);
  else if (key == "controller_batch") c.controller_batch = parse_integer<std::size_t>(key, value);
  else if (key == "gamma") c.gamma = static_cast<float>(parse_real(key, value));
  else if (key == "variant") c.variant = env::parse_variant(value);
  else if (key == "augmented") c.augmented = parse_bool(key, value);
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "eps_min") c.eps_min = parse_real(key, value);
  else if (key == "eps_max") c.eps_max = parse_real(key, value);
  else if (key == "eps_lambda") c.eps_lambda = parse_real(key, value);
  else if (key == "model_lr") c.model_lr = static_cast<float>(parse_real(key, value));
  else if (key == "controller_lr") c.controller_lr = static_cast<float>(parse_real(key, value));
  else if (key == "real_capacity") c.real_capacity = parse_integer<std::size_t>(key, value);
  else if (key == "imaginary_capacity") c.imaginary_capacity = parse_integer<std::size_t>(key, value);
  else if (key == "resample_latents") c.resample_latents = parse_bool(key, value);
  else if (key == "checkpoint_interval") c.checkpoint_interval = parse_integer<std::size_t>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void validate(const TrainConfig& c) {
  if (c.n_r > 1 || c.n_i > 1) throw ConfigError("n_r and n_i must be 0 or 1 (higher update rates destabilize training)");
  if (c.gamma < 0.0F || c.gamma > 1.0F) throw ConfigError("gamma must lie in [0, 1]");
  if (c.eps_min < 0.0 || c.eps_max > 1.0 || c.eps_min > c.eps_max) {
    throw ConfigError("need 0 <= eps_min <= eps_max <= 1");
  }
  if (c.eps_lambda < 0.0) throw ConfigError("eps_lambda must be non-negative");
  if (c.model_batch == 0 || c.controller_batch == 0) throw ConfigError("batch sizes must be positive");
  if (c.real_capacity == 0 || c.imaginary_capacity == 0) throw ConfigError("memory capacities must be positive");
  if (c.model_lr <= 0.0F || c.controller_lr <= 0.0F) throw ConfigError("learning rates must be positive");
  if (c.i_d > static_cast<std::size_t>(env::kMaxEpisodeSteps)) throw ConfigError("i_d may not exceed 10");
}

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  validate(base);
  return base;
}

TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_train_config(buffer.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"num_episodes", std::to_string(c.num_episodes)},
      {"i_start", std::to_string(c.i_start)},
      {"i_d", std::to_string(c.i_d)},
      {"i_b", std::to_string(c.i_b)},
      {"n_e", std::to_string(c.n_e)},
      {"n_r", std::to_string(c.n_r)},
      {"n_i", std::to_string(c.n_i)},
      {"model_batch", std::to_string(c.model_batch)},
      {"controller_batch", std::to_string(c.controller_batch)},
      {"gamma", format_real(c.gamma)},
      {"variant", std::string(env::variant_name(c.variant))},
      {"augmented", b(c.augmented)},
      {"seed", std::to_string(c.seed)},
      {"eps_min", format_real(c.eps_min)},
      {"eps_max", format_real(c.eps_max)},
      {"eps_lambda", format_real(c.eps_lambda)},
      {"model_lr", format_real(c.model_lr)},
      {"controller_lr", format_real(c.controller_lr)},
      {"real_capacity", std::to_string(c.real_capacity)},
      {"imaginary_capacity", std::to_string(c.imaginary_capacity)},
      {"resample_latents", b(c.resample_latents)},
      {"checkpoint_interval", std::to_string(c.checkpoint_interval)},
  };
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += k + "=" + v + "\n";
  return out;
}

std::string config_digest(const TrainConfig& config) { return sha256_hex(format_train_config(config)); }

}  // namespace imagine::trainer
