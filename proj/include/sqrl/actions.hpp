#pragma once

#include <array>
#include <string>
#include <vector>

#include "sqrl/common.hpp"

namespace sqrl {

// Canonical Atari action set. Every game uses a prefix of this list; the
// index of a name in the full list is its canonical id.
inline constexpr int kMaxActions = 18;

inline const std::array<const char*, kMaxActions>& action_names_full() {
  static const std::array<const char*, kMaxActions> names = {
      "NOOP",        "FIRE",        "UP",          "RIGHT",         "LEFT",
      "DOWN",        "UPRIGHT",     "UPLEFT",      "DOWNRIGHT",     "DOWNLEFT",
      "UPFIRE",      "RIGHTFIRE",   "LEFTFIRE",    "DOWNFIRE",      "UPRIGHTFIRE",
      "UPLEFTFIRE",  "DOWNRIGHTFIRE", "DOWNLEFTFIRE"};
  return names;
}

struct ActionEffect {
  int dx;
  int dy;  // screen coordinates: y grows downward, so UP is dy = -1
  bool fire;
};

inline ActionEffect action_effect(int id) {
  static const std::array<ActionEffect, kMaxActions> fx = {{
      {0, 0, false},  {0, 0, true},   {0, -1, false}, {1, 0, false},  {-1, 0, false},
      {0, 1, false},  {1, -1, false}, {-1, -1, false}, {1, 1, false}, {-1, 1, false},
      {0, -1, true},  {1, 0, true},   {-1, 0, true},  {0, 1, true},   {1, -1, true},
      {-1, -1, true}, {1, 1, true},   {-1, 1, true},
  }};
  if (id < 0 || id >= kMaxActions) throw DataError("invalid action id " + std::to_string(id));
  return fx[static_cast<size_t>(id)];
}

inline std::vector<std::string> action_name_prefix(int action_space_size) {
  if (action_space_size < 2 || action_space_size > kMaxActions)
    throw ConfigError("action_space_size must be in [2," + std::to_string(kMaxActions) + "], got " +
                      std::to_string(action_space_size));
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(action_space_size));
  for (int i = 0; i < action_space_size; ++i) out.emplace_back(action_names_full()[static_cast<size_t>(i)]);
  return out;
}

// Canonical id of a name, -1 if unknown.
inline int action_id_of(const std::string& name) {
  const auto& names = action_names_full();
  for (int i = 0; i < kMaxActions; ++i)
    if (name == names[static_cast<size_t>(i)]) return i;
  return -1;
}

}  // namespace sqrl
