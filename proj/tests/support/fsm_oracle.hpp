#pragma once

// Brute-force restatement of the puzzle rules over character strings, written
// without reference to the library's enums or indexing.

#include <string>

namespace oracle {

// Arrows as three characters from "URDL" (clockwise order) plus the pointed cube.
struct State {
  std::string arrows;
  int pointed = 0;
};

inline char rotate(char c, bool clockwise) {
  static const std::string ring = "URDL";
  const auto i = static_cast<int>(ring.find(c));
  return ring[static_cast<std::size_t>((i + (clockwise ? 1 : 3)) % 4)];
}

inline bool illegal(const State& s) {
  return s.arrows[0] == s.arrows[1] || s.arrows[0] == s.arrows[2] || s.arrows[1] == s.arrows[2];
}

inline bool goal(const State& s, bool hard) {
  if (illegal(s)) return false;
  if (s.arrows[static_cast<std::size_t>(s.pointed)] != 'D') return false;
  return !hard || s.arrows.find('U') == std::string::npos;
}

struct Outcome {
  State next;
  int reward = 0;
  std::string kind;  // "goal", "illegal", "timeout", "none"
};

inline Outcome step(const State& s, int action, int steps_taken, bool hard) {
  Outcome out;
  out.next = s;
  const auto cube = static_cast<std::size_t>(action / 2);
  out.next.arrows[cube] = rotate(s.arrows[cube], action % 2 == 0);
  if (illegal(out.next)) {
    out.reward = -5;
    out.kind = "illegal";
  } else if (goal(out.next, hard)) {
    out.reward = 50;
    out.kind = "goal";
  } else {
    out.reward = -1;
    out.kind = steps_taken + 1 >= 10 ? "timeout" : "none";
  }
  return out;
}

template <class F>
void for_each_state(F f) {
  const std::string ring = "URDL";
  for (char a : ring) {
    for (char b : ring) {
      for (char c : ring) {
        for (int p = 0; p < 3; ++p) f(State{std::string{a, b, c}, p});
      }
    }
  }
}

}  // namespace oracle
