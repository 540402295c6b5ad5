#pragma once

// Arrow-cube puzzle as an exact finite state machine. Three cubes each show an
// arrow (up/right/down/left); a human points at one cube for the whole
// episode. Down means "toward the human", Up means "toward the agent".

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imagine/core/rng.hpp"

namespace imagine::env {

// Declared in clockwise order, so clockwise rotation is +1 mod 4.
enum class Direction : std::uint8_t { Up = 0, Right = 1, Down = 2, Left = 3 };

enum class Variant { Easy, Hard };
enum class StateClass { Neutral, Goal, Illegal };
enum class TerminalKind { None, Goal, Illegal, Timeout };

inline constexpr int kNumCubes = 3;
inline constexpr int kNumDirections = 4;
inline constexpr int kNumStates = 192;
inline constexpr int kNumActions = 6;
inline constexpr int kMaxEpisodeSteps = 10;

inline constexpr int kGoalReward = 50;
inline constexpr int kIllegalReward = -5;
inline constexpr int kStepReward = -1;

constexpr Direction rotate_clockwise(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + 1) % kNumDirections);
}
constexpr Direction rotate_counterclockwise(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + kNumDirections - 1) % kNumDirections);
}

char direction_char(Direction d);

// Action id in [0, 6): cube = id / 2, clockwise when id is even.
class ActionId {
 public:
  explicit ActionId(int id);  // throws UsageError when out of range

  constexpr int value() const noexcept { return id_; }
  constexpr int cube() const noexcept { return id_ / 2; }
  constexpr bool clockwise() const noexcept { return id_ % 2 == 0; }

  friend constexpr bool operator==(ActionId, ActionId) = default;

 private:
  int id_;
};

std::string action_name(ActionId action);

struct Macrostate {
  std::array<Direction, kNumCubes> arrows{Direction::Up, Direction::Up, Direction::Up};
  std::uint8_t pointed = 0;

  // Dense index in [0, 192).
  int index() const noexcept;
  static Macrostate from_index(int index);

  friend bool operator==(const Macrostate&, const Macrostate&) = default;
};

struct StepOutcome {
  Macrostate next;
  int reward = kStepReward;
  bool terminal = false;
  TerminalKind terminal_kind = TerminalKind::None;
};

// Illegal if any two arrows share a direction (takes precedence); goal if the
// pointed arrow is Down (Hard additionally forbids any Up arrow).
StateClass classify(const Macrostate& state, Variant variant);

// Pure dynamics: rotate one cube a quarter turn. Defined for every state.
Macrostate apply_action(const Macrostate& state, ActionId action);

// One environment transition from a neutral state with `steps_taken` < 10 prior
// actions. Throws UsageError when called from a terminal state or past the cap.
StepOutcome step(const Macrostate& state, ActionId action, int steps_taken, Variant variant);

// Uniform over the neutral states of `variant`.
Macrostate reset(Rng& rng, Variant variant);

std::vector<std::pair<Macrostate, StateClass>> enumerate_states(Variant variant);
const std::vector<Macrostate>& neutral_states(Variant variant);

// "U L D|p0": arrows left to right, then the pointed cube index.
std::string to_string(const Macrostate& state);
Macrostate parse_state(std::string_view text);  // throws ConfigError

std::string_view variant_name(Variant variant);
Variant parse_variant(std::string_view text);  // "easy" | "hard"
std::string_view terminal_kind_name(TerminalKind kind);
int reward_for(StateClass cls);

}  // namespace imagine::env
