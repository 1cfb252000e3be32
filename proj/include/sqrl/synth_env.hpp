#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sqrl/actions.hpp"
#include "sqrl/rng.hpp"
#include "sqrl/trajectory.hpp"

namespace sqrl {

// A deterministic collect-the-target grid game rendered to 84x84 grayscale.
// The knobs span distinct game characteristics: action_space_size (canonical
// prefix), texture_level (static background noise density -> entropy /
// compressibility), reward_sparsity (expert path length to each target),
// fire_required (composite-action pressure). Movement wraps toroidally so
// small action prefixes can still reach every cell.
struct GameSpec {
  std::string name;
  int action_space_size = 6;
  int grid_w = 12;
  int grid_h = 12;
  double texture_level = 0.0;  // in [0, 1]
  int reward_sparsity = 3;     // >= 1, expert steps between rewards
  int max_episode_len = 120;
  bool fire_required = false;
  uint64_t seed = 0;

  void validate() const;
};

struct EnvState {
  int agent_x = 0;
  int agent_y = 0;
  std::optional<std::pair<int, int>> target;  // at most one active target
  int targets_remaining = 0;                  // quota including the active one
  bool fired = false;
  int step_count = 0;
  Rng rng{0};
  Frame background;                 // static per-episode texture layer
  std::vector<int> dist_to_target;  // BFS steps per cell, -1 unreachable
};

class SynthEnv {
 public:
  explicit SynthEnv(GameSpec spec);

  const GameSpec& spec() const { return spec_; }
  int action_count() const { return spec_.action_space_size; }

  // Deterministic initial layout from (spec.seed, episode_seed).
  Frame reset(uint64_t episode_seed);

  struct StepResult {
    Frame frame;
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(int action_id);

  const EnvState& state() const { return state_; }

  // Scripted expert: one action toward the nearest target, firing when the
  // collecting move needs it. Deterministic given the state.
  int expert_action() const;

 private:
  Frame render() const;
  void spawn_target();
  std::vector<int> bfs_distances(int from_x, int from_y) const;
  int wrap_x(int x) const;
  int wrap_y(int y) const;

  GameSpec spec_;
  EnvState state_;
  std::vector<std::pair<int, int>> move_vectors_;  // deduped nonzero movement deltas
};

enum class DataPolicy { kRandom, kScriptedExpert };

// Rolls out `episodes` episodes and packs them into a dataset. epsilon is the
// expert policy's random-action probability (ignored for kRandom).
TrajectoryDataset generate_dataset(const GameSpec& spec, DataPolicy policy, double epsilon,
                                   int episodes, uint64_t seed);

// Built-in suites. The default 12-game suite spreads action counts, texture
// levels and sparsities; the ci suite is a 3-game scaled-down variant.
std::vector<GameSpec> default_suite();
std::vector<GameSpec> ci_suite();

}  // namespace sqrl
