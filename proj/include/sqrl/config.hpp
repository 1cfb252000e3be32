#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqrl/nn/config.hpp"
#include "sqrl/synth_env.hpp"

namespace sqrl {

// Everything one experiment run needs; all stages hash the same RunConfig so
// artifacts can be checked for consistency.
struct DataConfig {
  int episodes = 100;
  double policy_epsilon = 0.25;  // expert mix used for generation
  double sample_fraction = 1.0;  // applied after generation / import
  bool clip_rewards = false;
};

struct EvalSettings {
  int episodes = 10;
  std::string target = "auto";  // "auto" or a number
  std::string action_selection = "sample";  // or "argmax"
  double temperature = 1.0;
  int max_steps = 1000;
  int baseline_episodes = 100;
};

struct AnalysisSettings {
  int n_trees = 1000;
  int k_folds = 6;
  int shap_permutations = 200;
};

struct ModelGrid {
  std::vector<std::string> archs = {"dt", "dm"};
  std::vector<int> contexts = {10, 30, 50};
  std::vector<uint64_t> seeds = {123, 132, 231};
};

struct RunConfig {
  std::string profile = "custom";
  uint64_t global_seed = 1;
  std::vector<GameSpec> suite;
  DataConfig data;
  ModelConfig model;  // arch/context/action count filled per grid entry
  ModelGrid grid;
  TrainConfig train;
  EvalSettings eval;
  AnalysisSettings analysis;
  int stats_frames = 1000;

  void validate() const;
  std::string canonical_json() const;
  std::string config_hash() const;  // 16 hex chars
};

RunConfig profile_config(const std::string& name);  // "paper" | "ci"
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace sqrl
