#include "imagine/env/puzzle.hpp"

#include <string>

#include "imagine/core/errors.hpp"

namespace imagine::env {

char direction_char(Direction d) {
  switch (d) {
    case Direction::Up:
      return 'U';
    case Direction::Right:
      return 'R';
    case Direction::Down:
      return 'D';
    case Direction::Left:
      return 'L';
  }
  return '?';
}

ActionId::ActionId(int id) : id_(id) {
  if (id < 0 || id >= kNumActions) throw UsageError("action id " + std::to_string(id) + " outside [0, 6)");
}

std::string action_name(ActionId action) {
  return "cube" + std::to_string(action.cube()) + (action.clockwise() ? "-cw" : "-ccw");
}

int Macrostate::index() const noexcept {
  int arrows_index = 0;
  for (Direction d : arrows) arrows_index = arrows_index * kNumDirections + static_cast<int>(d);
  return arrows_index * kNumCubes + pointed;
}

Macrostate Macrostate::from_index(int index) {
  if (index < 0 || index >= kNumStates) throw UsageError("macrostate index out of range");
  Macrostate s;
  s.pointed = static_cast<std::uint8_t>(index % kNumCubes);
  int arrows_index = index / kNumCubes;
  for (int c = kNumCubes - 1; c >= 0; --c) {
    s.arrows[static_cast<std::size_t>(c)] = static_cast<Direction>(arrows_index % kNumDirections);
    arrows_index /= kNumDirections;
  }
  return s;
}

StateClass classify(const Macrostate& state, Variant variant) {
  const auto& a = state.arrows;
  if (a[0] == a[1] || a[0] == a[2] || a[1] == a[2]) return StateClass::Illegal;
  if (a[state.pointed] != Direction::Down) return StateClass::Neutral;
  if (variant == Variant::Hard) {
    for (Direction d : a) {
      if (d == Direction::Up) return StateClass::Neutral;
    }
  }
  return StateClass::Goal;
}

Macrostate apply_action(const Macrostate& state, ActionId action) {
  Macrostate next = state;
  auto& arrow = next.arrows[static_cast<std::size_t>(action.cube())];
  arrow = action.clockwise() ? rotate_clockwise(arrow) : rotate_counterclockwise(arrow);
  return next;
}

int reward_for(StateClass cls) {
  switch (cls) {
    case StateClass::Goal:
      return kGoalReward;
    case StateClass::Illegal:
      return kIllegalReward;
    case StateClass::Neutral:
      return kStepReward;
  }
  return kStepReward;
}

StepOutcome step(const Macrostate& state, ActionId action, int steps_taken, Variant variant) {
  if (classify(state, variant) != StateClass::Neutral) throw UsageError("step() from a terminal state");
  if (steps_taken < 0 || steps_taken >= kMaxEpisodeSteps) throw UsageError("step() past the episode step cap");
  StepOutcome out;
  out.next = apply_action(state, action);
  const StateClass cls = classify(out.next, variant);
  out.reward = reward_for(cls);
  switch (cls) {
    case StateClass::Goal:
      out.terminal = true;
      out.terminal_kind = TerminalKind::Goal;
      break;
    case StateClass::Illegal:
      out.terminal = true;
      out.terminal_kind = TerminalKind::Illegal;
      break;
    case StateClass::Neutral:
      if (steps_taken + 1 == kMaxEpisodeSteps) {
        out.terminal = true;
        out.terminal_kind = TerminalKind::Timeout;
      }
      break;
  }
  return out;
}

std::vector<std::pair<Macrostate, StateClass>> enumerate_states(Variant variant) {
  std::vector<std::pair<Macrostate, StateClass>> out;
  out.reserve(kNumStates);
  for (int i = 0; i < kNumStates; ++i) {
    const Macrostate s = Macrostate::from_index(i);
    out.emplace_back(s, classify(s, variant));
  }
  return out;
}

const std::vector<Macrostate>& neutral_states(Variant variant) {
  static const auto build = [](Variant v) {
    std::vector<Macrostate> out;
    for (const auto& [s, cls] : enumerate_states(v)) {
      if (cls == StateClass::Neutral) out.push_back(s);
    }
    return out;
  };
  static const std::vector<Macrostate> easy = build(Variant::Easy);
  static const std::vector<Macrostate> hard = build(Variant::Hard);
  return variant == Variant::Easy ? easy : hard;
}

Macrostate reset(Rng& rng, Variant variant) {
  const auto& pool = neutral_states(variant);
  return pool[rng.index(pool.size())];
}

std::string to_string(const Macrostate& state) {
  std::string out;
  for (int c = 0; c < kNumCubes; ++c) {
    if (c > 0) out += ' ';
    out += direction_char(state.arrows[static_cast<std::size_t>(c)]);
  }
  out += "|p";
  out += std::to_string(state.pointed);
  return out;
}

Macrostate parse_state(std::string_view text) {
  auto fail = [&]() -> Macrostate {
    throw ConfigError("malformed state '" + std::string(text) + "', expected e.g. \"U L D|p0\"");
  };
  if (text.size() != 8 || text[1] != ' ' || text[3] != ' ' || text[5] != '|' || text[6] != 'p') return fail();
  Macrostate s;
  for (int c = 0; c < kNumCubes; ++c) {
    switch (text[static_cast<std::size_t>(2 * c)]) {
      case 'U':
        s.arrows[static_cast<std::size_t>(c)] = Direction::Up;
        break;
      case 'R':
        s.arrows[static_cast<std::size_t>(c)] = Direction::Right;
        break;
      case 'D':
        s.arrows[static_cast<std::size_t>(c)] = Direction::Down;
        break;
      case 'L':
        s.arrows[static_cast<std::size_t>(c)] = Direction::Left;
        break;
      default:
        return fail();
    }
  }
  const char p = text[7];
  if (p < '0' || p > '2') return fail();
  s.pointed = static_cast<std::uint8_t>(p - '0');
  return s;
}

std::string_view variant_name(Variant variant) { return variant == Variant::Easy ? "easy" : "hard"; }

Variant parse_variant(std::string_view text) {
  if (text == "easy") return Variant::Easy;
  if (text == "hard") return Variant::Hard;
  throw ConfigError("variant must be 'easy' or 'hard', got '" + std::string(text) + "'");
}

std::string_view terminal_kind_name(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::None:
      return "none";
    case TerminalKind::Goal:
      return "goal";
    case TerminalKind::Illegal:
      return "illegal";
    case TerminalKind::Timeout:
      return "timeout";
  }
  return "none";
}

}  // namespace imagine::env
