#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sqrl/actions.hpp"
#include "sqrl/common.hpp"
#include "sqrl/rng.hpp"

namespace sqrl {

inline constexpr int kFrameH = 84;
inline constexpr int kFrameW = 84;
inline constexpr int kFramePixels = kFrameH * kFrameW;
inline constexpr int kFrameStack = 4;

using Frame = std::vector<uint8_t>;  // kFramePixels, row-major

// One trajectory. frames[t] is the observation at step t, actions[t] the
// action taken from it, rewards[t] the reward received for that action.
// rtg is always recomputed from rewards, never stored externally.
struct Episode {
  std::vector<Frame> frames;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> rtg;

  size_t length() const { return actions.size(); }
  double episode_return() const { return rtg.empty() ? 0.0 : rtg[0]; }
};

// Return-to-go: out[t] = sum of rewards[t..end], computed by a single reverse
// pass so the summation order (and therefore the result) is fixed.
std::vector<double> compute_rtg(const std::vector<double>& rewards);

struct TrajectoryDataset {
  std::string game_name;
  int action_space_size = 0;
  std::vector<std::string> action_names;
  std::vector<Episode> episodes;
  double max_return = 0.0;

  size_t total_transitions() const {
    size_t n = 0;
    for (const auto& e : episodes) n += e.length();
    return n;
  }
  void recompute_derived();  // rtg per episode + max_return
  void validate() const;
};

// Uniformly samples ceil(fraction * episodes) episodes without replacement.
TrajectoryDataset sample_fraction(const TrajectoryDataset& ds, double fraction, uint64_t seed);

// Replaces every reward by its sign (DQN-replay convention); rtg is rebuilt.
void clip_rewards_sign(TrajectoryDataset& ds);

struct DatasetStats {
  int num_actions = 0;
  double avg_traj_len = 0.0;
  double avg_steps_first_reward = 0.0;  // 1-based index, mean over episodes with a nonzero reward
  size_t reward_free_episodes = 0;      // excluded from the mean above
  bool steps_first_reward_defined = false;
};

DatasetStats dataset_statistics(const TrajectoryDataset& ds);

}  // namespace sqrl
