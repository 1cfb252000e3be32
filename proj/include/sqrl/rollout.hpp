#pragma once

#include <optional>

#include "sqrl/eval_stats.hpp"
#include "sqrl/fusion.hpp"
#include "sqrl/nn/model.hpp"
#include "sqrl/synth_env.hpp"

namespace sqrl {

struct EvalConfig {
  int episodes = 10;
  std::vector<uint64_t> seeds = {123};
  double target_return = 0.0;
  bool auto_target = true;  // 5 * max_return from the checkpoint metadata
  bool argmax = false;      // default: multinomial sampling at `temperature`
  double temperature = 1.0;
  int max_steps = 1000;

  void validate() const {
    if (episodes < 1) throw ConfigError("eval episodes must be >= 1");
    if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  }
};

// One return-conditioned autoregressive episode. The model decides in its
// (possibly fused) action space; `map`, when given, defuses each decision to
// the primitive executed in the environment. The running return-to-go starts
// at target_return and decreases by each received reward (it may go
// negative).
double rollout_episode(nn::SequenceModel<float>& model, SynthEnv& env, const FusionMap* map,
                       double target_return, bool argmax, double temperature, int max_steps,
                       uint64_t episode_seed);

struct EvalOutcome {
  std::vector<double> raw_returns;  // per episode
};

EvalOutcome evaluate_model(nn::SequenceModel<float>& model, const GameSpec& spec, const FusionMap* map,
                           const EvalConfig& config, uint64_t seed);

}  // namespace sqrl
