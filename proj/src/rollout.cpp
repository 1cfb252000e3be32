#include "sqrl/rollout.hpp"

#include <cstring>

namespace sqrl {

namespace {

// Fills a right-aligned window batch (B=1) from the rollout history. The slot
// for the current step holds a placeholder action: the state-token logits at
// that step cannot attend to it.
void fill_window(SequenceBatch& b, const std::vector<Frame>& frames, const std::vector<int>& actions,
                 const std::vector<double>& rtgs, int K) {
  const int t = static_cast<int>(frames.size()) - 1;  // current step index
  b.batch = 1;
  b.context = K;
  const size_t bk = static_cast<size_t>(K);
  b.rtg.assign(bk, 0.0);
  b.states.assign(bk * kFrameStack * kFramePixels, 0);
  b.actions.assign(bk, 0);
  b.timesteps.assign(bk, 0);
  b.targets.assign(bk, 0);
  b.pad_mask.assign(bk, 1);
  for (int k = 0; k < K; ++k) {
    const int step = t - (K - 1) + k;
    if (step < 0) continue;
    b.pad_mask[static_cast<size_t>(k)] = 0;
    b.rtg[static_cast<size_t>(k)] = rtgs[static_cast<size_t>(step)];
    b.timesteps[static_cast<size_t>(k)] = step;
    b.actions[static_cast<size_t>(k)] =
        step < static_cast<int>(actions.size()) ? actions[static_cast<size_t>(step)] : 0;
    uint8_t* dst = b.states.data() + static_cast<size_t>(k) * kFrameStack * kFramePixels;
    for (int s = 0; s < kFrameStack; ++s) {
      int src = step - (kFrameStack - 1) + s;
      if (src < 0) src = 0;
      std::memcpy(dst + static_cast<size_t>(s) * kFramePixels, frames[static_cast<size_t>(src)].data(),
                  kFramePixels);
    }
  }
}

int select_action(const float* logits, int M, bool argmax, double temperature, Rng& rng) {
  if (argmax) {
    int best = 0;
    for (int j = 1; j < M; ++j)
      if (logits[j] > logits[best]) best = j;
    return best;
  }
  // Multinomial sample over softmax(logits / temperature).
  double maxv = logits[0];
  for (int j = 1; j < M; ++j) maxv = std::max(maxv, static_cast<double>(logits[j]));
  std::vector<double> probs(static_cast<size_t>(M));
  double denom = 0.0;
  for (int j = 0; j < M; ++j) {
    probs[static_cast<size_t>(j)] = std::exp((logits[j] - maxv) / temperature);
    denom += probs[static_cast<size_t>(j)];
  }
  double u = rng.next_double() * denom;
  for (int j = 0; j < M; ++j) {
    u -= probs[static_cast<size_t>(j)];
    if (u <= 0.0) return j;
  }
  return M - 1;
}

}  // namespace

double rollout_episode(nn::SequenceModel<float>& model, SynthEnv& env, const FusionMap* map,
                       double target_return, bool argmax, double temperature, int max_steps,
                       uint64_t episode_seed) {
  const int model_actions = model.config().action_space_size;
  const int env_actions = env.action_count();
  if (map) {
    if (map->fused_count() != model_actions)
      throw DataError("fusion map fused-action count does not match the model");
    if (map->primitive_count() != env_actions)
      throw DataError("fusion map primitive count does not match the environment");
  } else if (model_actions != env_actions) {
    throw DataError("model/environment action space mismatch (" + std::to_string(model_actions) +
                    " vs " + std::to_string(env_actions) + ")");
  }

  const int K = model.config().context;
  Rng sample_rng = Rng::derive(episode_seed ^ 0xac710e5ull, 1);
  Rng defuse_rng = Rng::derive(episode_seed ^ 0xdef05eull, 2);

  std::vector<Frame> frames;
  std::vector<int> actions;     // model-space decisions
  std::vector<double> rtgs;     // conditioning value per step
  frames.push_back(env.reset(episode_seed));

  double rtg = target_return;
  double total = 0.0;
  SequenceBatch window;
  for (int step = 0; step < max_steps; ++step) {
    rtgs.push_back(rtg);
    fill_window(window, frames, actions, rtgs, K);
    const auto& logits = model.forward(window, nullptr);
    const float* row = logits.data() + static_cast<size_t>(K - 1) * model_actions;
    const int decided = select_action(row, model_actions, argmax, temperature, sample_rng);
    const int primitive = map ? defuse_action(decided, *map, DefuseMode::kFirst, &defuse_rng) : decided;
    auto res = env.step(primitive);
    actions.push_back(decided);
    total += res.reward;
    rtg -= res.reward;
    frames.push_back(std::move(res.frame));
    if (res.done) break;
  }
  return total;
}

EvalOutcome evaluate_model(nn::SequenceModel<float>& model, const GameSpec& spec, const FusionMap* map,
                           const EvalConfig& config, uint64_t seed) {
  config.validate();
  SynthEnv env(spec);
  EvalOutcome out;
  for (int ep = 0; ep < config.episodes; ++ep) {
    const uint64_t episode_seed = Rng::derive(seed, static_cast<uint64_t>(ep)).next_u64();
    out.raw_returns.push_back(rollout_episode(model, env, map, config.target_return, config.argmax,
                                              config.temperature, config.max_steps, episode_seed));
  }
  return out;
}

}  // namespace sqrl
