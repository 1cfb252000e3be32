#include "sqrl/synth_env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace sqrl {

namespace {
constexpr uint8_t kBackgroundShade = 24;
constexpr uint8_t kTargetShade = 160;
constexpr uint8_t kAgentShade = 255;
constexpr uint8_t kAgentFiredShade = 230;
// Texture palette avoids the background/agent/target shades. With 16 values
// the frame-entropy curve h2(d) + 4d peaks at density 16/17, so scaling the
// density to at most 0.8 keeps entropy strictly increasing over the whole
// texture_level range.
constexpr uint8_t kPalette[16] = {8,  16,  40,  48,  64,  72,  88,  96,
                                  112, 128, 136, 144, 176, 192, 208, 216};
constexpr double kTextureDensityScale = 0.8;
}  // namespace

void GameSpec::validate() const {
  if (name.empty()) throw ConfigError("game spec needs a name");
  if (action_space_size < 2 || action_space_size > kMaxActions)
    throw ConfigError(name + ": action_space_size out of [2,18]");
  if (grid_w < 2 || grid_h < 2 || grid_w > 64 || grid_h > 64)
    throw ConfigError(name + ": grid must be between 2x2 and 64x64");
  if (texture_level < 0.0 || texture_level > 1.0) throw ConfigError(name + ": texture_level out of [0,1]");
  if (reward_sparsity < 1) throw ConfigError(name + ": reward_sparsity must be >= 1");
  if (max_episode_len < 1) throw ConfigError(name + ": max_episode_len must be >= 1");
}

SynthEnv::SynthEnv(GameSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (int a = 0; a < spec_.action_space_size; ++a) {
    ActionEffect fx = action_effect(a);
    if (fx.dx == 0 && fx.dy == 0) continue;
    std::pair<int, int> v{fx.dx, fx.dy};
    if (std::find(move_vectors_.begin(), move_vectors_.end(), v) == move_vectors_.end())
      move_vectors_.push_back(v);
  }
}

int SynthEnv::wrap_x(int x) const { return ((x % spec_.grid_w) + spec_.grid_w) % spec_.grid_w; }
int SynthEnv::wrap_y(int y) const { return ((y % spec_.grid_h) + spec_.grid_h) % spec_.grid_h; }

std::vector<int> SynthEnv::bfs_distances(int from_x, int from_y) const {
  std::vector<int> dist(static_cast<size_t>(spec_.grid_w) * spec_.grid_h, -1);
  std::deque<int> queue;
  int start = from_y * spec_.grid_w + from_x;
  dist[static_cast<size_t>(start)] = 0;
  queue.push_back(start);
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    int cx = cur % spec_.grid_w, cy = cur / spec_.grid_w;
    for (auto [dx, dy] : move_vectors_) {
      int nx = wrap_x(cx + dx), ny = wrap_y(cy + dy);
      int ni = ny * spec_.grid_w + nx;
      if (dist[static_cast<size_t>(ni)] < 0) {
        dist[static_cast<size_t>(ni)] = dist[static_cast<size_t>(cur)] + 1;
        queue.push_back(ni);
      }
    }
  }
  return dist;
}

void SynthEnv::spawn_target() {
  // Candidate cells at exactly the sparsity distance from the agent (or the
  // closest achievable distance), chosen with the episode RNG.
  std::vector<int> from_agent = bfs_distances(state_.agent_x, state_.agent_y);
  int want = spec_.reward_sparsity;
  int best_gap = -1;
  int chosen_dist = 0;
  for (int d : from_agent) {
    if (d <= 0) continue;  // skip the agent cell and unreachable cells
    int gap = std::abs(d - want);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      chosen_dist = d;
    }
  }
  if (best_gap < 0) {
    // No reachable cell besides the agent's own (movement-free action set):
    // the target shares the agent cell and a FIRE-style action collects it.
    state_.target = {{state_.agent_x, state_.agent_y}};
    state_.dist_to_target = from_agent;
    return;
  }
  std::vector<int> candidates;
  for (size_t i = 0; i < from_agent.size(); ++i)
    if (from_agent[i] == chosen_dist) candidates.push_back(static_cast<int>(i));
  int cell = candidates[state_.rng.next_below(candidates.size())];
  state_.target = {{cell % spec_.grid_w, cell / spec_.grid_w}};
  // Distance field toward the target follows reversed movement edges.
  std::vector<int> to_target(from_agent.size(), -1);
  {
    std::deque<int> queue;
    to_target[static_cast<size_t>(cell)] = 0;
    queue.push_back(cell);
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      int cx = cur % spec_.grid_w, cy = cur / spec_.grid_w;
      for (auto [dx, dy] : move_vectors_) {
        int nx = wrap_x(cx - dx), ny = wrap_y(cy - dy);
        int ni = ny * spec_.grid_w + nx;
        if (to_target[static_cast<size_t>(ni)] < 0) {
          to_target[static_cast<size_t>(ni)] = to_target[static_cast<size_t>(cur)] + 1;
          queue.push_back(ni);
        }
      }
    }
  }
  state_.dist_to_target = std::move(to_target);
}

Frame SynthEnv::reset(uint64_t episode_seed) {
  state_ = EnvState{};
  state_.rng = Rng::derive(spec_.seed, episode_seed);
  state_.agent_x = static_cast<int>(state_.rng.next_below(static_cast<uint64_t>(spec_.grid_w)));
  state_.agent_y = static_cast<int>(state_.rng.next_below(static_cast<uint64_t>(spec_.grid_h)));
  state_.targets_remaining = std::max(1, spec_.max_episode_len / (2 * spec_.reward_sparsity));
  state_.background.assign(kFramePixels, kBackgroundShade);
  const double density = spec_.texture_level * kTextureDensityScale;
  for (auto& px : state_.background) {
    if (state_.rng.next_double() < density) px = kPalette[state_.rng.next_below(16)];
  }
  spawn_target();
  return render();
}

SynthEnv::StepResult SynthEnv::step(int action_id) {
  if (action_id < 0 || action_id >= spec_.action_space_size)
    throw DataError(spec_.name + ": action id " + std::to_string(action_id) + " out of range");
  if (state_.background.empty()) throw DataError(spec_.name + ": step before reset");
  ActionEffect fx = action_effect(action_id);
  state_.agent_x = wrap_x(state_.agent_x + fx.dx);
  state_.agent_y = wrap_y(state_.agent_y + fx.dy);
  state_.fired = fx.fire;

  StepResult res;
  if (state_.target && state_.agent_x == state_.target->first && state_.agent_y == state_.target->second &&
      (!spec_.fire_required || state_.fired)) {
    res.reward = 1.0;
    --state_.targets_remaining;
    if (state_.targets_remaining > 0)
      spawn_target();
    else
      state_.target.reset();
  }
  ++state_.step_count;
  res.done = state_.step_count >= spec_.max_episode_len || state_.targets_remaining == 0;
  res.frame = render();
  return res;
}

int SynthEnv::expert_action() const {
  if (!state_.target) return 0;
  auto dist_at = [&](int x, int y) { return state_.dist_to_target[static_cast<size_t>(y * spec_.grid_w + x)]; };
  const bool on_target = state_.agent_x == state_.target->first && state_.agent_y == state_.target->second;
  if (on_target) {
    // Needs a fire to collect (a plain arrival did not): FIRE in place.
    return spec_.fire_required ? 1 : 0;
  }
  int best_action = 0;
  int best_dist = dist_at(state_.agent_x, state_.agent_y);
  bool found = false;
  for (int a = 0; a < spec_.action_space_size; ++a) {
    ActionEffect fx = action_effect(a);
    if (fx.dx == 0 && fx.dy == 0) continue;
    int nx = wrap_x(state_.agent_x + fx.dx), ny = wrap_y(state_.agent_y + fx.dy);
    int d = dist_at(nx, ny);
    if (d < 0) continue;
    if (!found || d < best_dist) {
      found = true;
      best_dist = d;
      best_action = a;
    }
  }
  if (!found) return 0;
  if (best_dist == 0 && spec_.fire_required) {
    // Prefer the move+fire composite that collects on arrival.
    ActionEffect fx = action_effect(best_action);
    for (int a = 0; a < spec_.action_space_size; ++a) {
      ActionEffect g = action_effect(a);
      if (g.dx == fx.dx && g.dy == fx.dy && g.fire) return a;
    }
  }
  return best_action;
}

Frame SynthEnv::render() const {
  Frame f = state_.background;
  auto blit = [&](int cx, int cy, uint8_t shade) {
    int x0 = cx * kFrameW / spec_.grid_w, x1 = (cx + 1) * kFrameW / spec_.grid_w;
    int y0 = cy * kFrameH / spec_.grid_h, y1 = (cy + 1) * kFrameH / spec_.grid_h;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) f[static_cast<size_t>(y * kFrameW + x)] = shade;
  };
  if (state_.target) blit(state_.target->first, state_.target->second, kTargetShade);
  blit(state_.agent_x, state_.agent_y, state_.fired ? kAgentFiredShade : kAgentShade);
  return f;
}

TrajectoryDataset generate_dataset(const GameSpec& spec, DataPolicy policy, double epsilon,
                                   int episodes, uint64_t seed) {
  if (episodes < 1) throw ConfigError("generate_dataset needs episodes >= 1");
  if (policy == DataPolicy::kRandom) epsilon = 1.0;
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon out of [0,1]");
  TrajectoryDataset ds;
  ds.game_name = spec.name;
  ds.action_space_size = spec.action_space_size;
  ds.action_names = action_name_prefix(spec.action_space_size);
  SynthEnv env(spec);
  for (int i = 0; i < episodes; ++i) {
    Rng policy_rng = Rng::derive(seed ^ 0x7e15ef5a9d23c401ull, static_cast<uint64_t>(i));
    Episode e;
    Frame obs = env.reset(Rng::derive(seed, static_cast<uint64_t>(i)).next_u64());
    bool done = false;
    while (!done) {
      int action;
      if (policy_rng.next_double() < epsilon)
        action = static_cast<int>(policy_rng.next_below(static_cast<uint64_t>(spec.action_space_size)));
      else
        action = env.expert_action();
      auto res = env.step(action);
      e.frames.push_back(std::move(obs));
      e.actions.push_back(action);
      e.rewards.push_back(res.reward);
      obs = std::move(res.frame);
      done = res.done;
    }
    ds.episodes.push_back(std::move(e));
  }
  ds.recompute_derived();
  return ds;
}

std::vector<GameSpec> default_suite() {
  // Spreads: action counts 4..18, texture over [0,1], sparsity over 1..30.
  struct Row {
    const char* name;
    int actions;
    double texture;
    int sparsity;
    int grid;
    int len;
    bool fire;
  };
  // Grids leave headroom over 2*sparsity so the toroidal wrap never clamps
  // the intended target distance.
  static const Row rows[12] = {
      {"S1", 4, 0.00, 1, 10, 120, false},  {"S2", 6, 0.08, 2, 10, 120, false},
      {"S3", 6, 0.16, 3, 12, 140, false},  {"S4", 9, 0.25, 5, 14, 140, false},
      {"S5", 12, 0.35, 7, 16, 160, false}, {"S6", 14, 0.45, 9, 20, 160, false},
      {"S7", 18, 0.55, 12, 26, 180, false}, {"S8", 18, 0.65, 15, 32, 180, true},
      {"S9", 18, 0.75, 18, 38, 200, false}, {"S10", 18, 0.85, 21, 44, 200, true},
      {"S11", 18, 0.92, 25, 52, 220, false}, {"S12", 18, 1.00, 30, 62, 240, true},
  };
  std::vector<GameSpec> suite;
  uint64_t base_seed = 901;
  for (const Row& r : rows) {
    GameSpec g;
    g.name = r.name;
    g.action_space_size = r.actions;
    g.grid_w = g.grid_h = r.grid;
    g.texture_level = r.texture;
    g.reward_sparsity = r.sparsity;
    g.max_episode_len = r.len;
    g.fire_required = r.fire;
    g.seed = base_seed++;
    suite.push_back(std::move(g));
  }
  return suite;
}

std::vector<GameSpec> ci_suite() {
  std::vector<GameSpec> suite;
  struct Row {
    const char* name;
    int actions;
    double texture;
    int sparsity;
    int grid;
    int len;
  };
  static const Row rows[3] = {
      {"C1", 4, 0.05, 2, 10, 32}, {"C2", 6, 0.40, 4, 10, 32}, {"C3", 9, 0.80, 6, 12, 32}};
  uint64_t base_seed = 7001;
  for (const Row& r : rows) {
    GameSpec g;
    g.name = r.name;
    g.action_space_size = r.actions;
    g.grid_w = g.grid_h = r.grid;
    g.texture_level = r.texture;
    g.reward_sparsity = r.sparsity;
    g.max_episode_len = r.len;
    g.fire_required = false;
    g.seed = base_seed++;
    suite.push_back(std::move(g));
  }
  return suite;
}

}  // namespace sqrl
