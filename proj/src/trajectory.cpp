#include "sqrl/trajectory.hpp"

#include <algorithm>

namespace sqrl {

std::vector<double> compute_rtg(const std::vector<double>& rewards) {
  if (rewards.empty()) throw DataError("empty episode");
  for (double r : rewards)
    if (!std::isfinite(r)) throw DataError("non-finite reward in episode");
  std::vector<double> out(rewards.size());
  size_t last = rewards.size() - 1;
  out[last] = rewards[last];
  for (size_t t = last; t-- > 0;) out[t] = rewards[t] + out[t + 1];
  return out;
}

void TrajectoryDataset::recompute_derived() {
  max_return = 0.0;
  bool first = true;
  for (auto& e : episodes) {
    e.rtg = compute_rtg(e.rewards);
    if (first || e.rtg[0] > max_return) max_return = e.rtg[0];
    first = false;
  }
  if (episodes.empty()) max_return = 0.0;
}

void TrajectoryDataset::validate() const {
  if (action_space_size < 2 || action_space_size > kMaxActions)
    throw DataError("dataset action_space_size out of range: " + std::to_string(action_space_size));
  if (action_names.size() != static_cast<size_t>(action_space_size))
    throw DataError("action_names length mismatch");
  for (size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    const std::string where = "episode " + std::to_string(i);
    if (e.length() == 0) throw DataError(where + " is empty");
    if (e.frames.size() != e.length() || e.rewards.size() != e.length() || e.rtg.size() != e.length())
      throw DataError(where + " has mismatched field lengths");
    for (const auto& f : e.frames)
      if (f.size() != static_cast<size_t>(kFramePixels)) throw DataError(where + " has a malformed frame");
    for (int a : e.actions)
      if (a < 0 || a >= action_space_size) throw DataError(where + " has action id out of range");
  }
}

TrajectoryDataset sample_fraction(const TrajectoryDataset& ds, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("sample fraction must be in (0,1], got " + std::to_string(fraction));
  size_t n = ds.episodes.size();
  size_t k = static_cast<size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (k > n) k = n;
  Rng rng(seed);
  std::vector<size_t> picks = rng.sample_without_replacement(n, k);
  std::sort(picks.begin(), picks.end());  // preserve collection order in the subset
  TrajectoryDataset out;
  out.game_name = ds.game_name;
  out.action_space_size = ds.action_space_size;
  out.action_names = ds.action_names;
  out.episodes.reserve(picks.size());
  for (size_t i : picks) out.episodes.push_back(ds.episodes[i]);
  out.recompute_derived();
  return out;
}

void clip_rewards_sign(TrajectoryDataset& ds) {
  for (auto& e : ds.episodes)
    for (auto& r : e.rewards) r = (r > 0.0) - (r < 0.0);
  ds.recompute_derived();
}

DatasetStats dataset_statistics(const TrajectoryDataset& ds) {
  if (ds.episodes.empty()) throw DataError("dataset_statistics on empty dataset");
  DatasetStats st;
  st.num_actions = ds.action_space_size;
  double len_sum = 0.0;
  double first_sum = 0.0;
  size_t with_reward = 0;
  for (const auto& e : ds.episodes) {
    len_sum += static_cast<double>(e.length());
    size_t idx = 0;
    bool found = false;
    for (size_t t = 0; t < e.rewards.size(); ++t) {
      if (e.rewards[t] != 0.0) {
        idx = t + 1;  // 1-based
        found = true;
        break;
      }
    }
    if (found) {
      first_sum += static_cast<double>(idx);
      ++with_reward;
    } else {
      ++st.reward_free_episodes;
    }
  }
  st.avg_traj_len = len_sum / static_cast<double>(ds.episodes.size());
  st.steps_first_reward_defined = with_reward > 0;
  st.avg_steps_first_reward =
      st.steps_first_reward_defined ? first_sum / static_cast<double>(with_reward) : 0.0;
  return st;
}

}  // namespace sqrl
