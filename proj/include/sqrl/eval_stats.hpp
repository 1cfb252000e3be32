#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqrl/synth_env.hpp"

namespace sqrl {

struct NormalizationBaseline {
  std::string game;
  double random_score = 0.0;
  double human_score = 0.0;
};

// 100 * (raw - random) / (human - random): 0 is random play, 100 human-level.
double normalized_score(double raw, const NormalizationBaseline& baseline);

// Evaluation target: 5x the maximum return observed in the training data.
double expected_return(double max_return);

// Iteratively drops the point farthest from the median while it falls outside
// median +- 1.5*IQR of the remaining points and at least 3 would remain.
// Quartiles use the split-halves (Tukey) rule; ties break toward the lower
// index. Returns the kept values and the removed original indices.
struct OutlierResult {
  std::vector<double> filtered;
  std::vector<size_t> removed_indices;
};
OutlierResult remove_outliers(const std::vector<double>& scores);

struct ScoreSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population (n) when n < 2 -> 0
};
ScoreSummary summarize(const std::vector<double>& xs);

// Baselines for synthetic games are measured, not assumed: random = seeded
// random policy, "human" stand-in = the scripted expert at epsilon 0. Means
// over `episodes` episodes each.
NormalizationBaseline synth_baseline(const GameSpec& spec, int episodes, uint64_t seed);

// Mean return of a pure policy rollout set (used by tests and baselines).
double mean_policy_return(const GameSpec& spec, DataPolicy policy, double epsilon, int episodes,
                          uint64_t seed);

}  // namespace sqrl
