#include "sqrl/config.hpp"

#include <fstream>

#include <json.hpp>

namespace sqrl {

namespace {

using Json = nlohmann::ordered_json;

Json spec_to_json(const GameSpec& g) {
  Json j;
  j["name"] = g.name;
  j["action_space_size"] = g.action_space_size;
  j["grid_w"] = g.grid_w;
  j["grid_h"] = g.grid_h;
  j["texture_level"] = g.texture_level;
  j["reward_sparsity"] = g.reward_sparsity;
  j["max_episode_len"] = g.max_episode_len;
  j["fire_required"] = g.fire_required;
  j["seed"] = g.seed;
  return j;
}

GameSpec spec_from_json(const Json& j) {
  GameSpec g;
  g.name = j.at("name").get<std::string>();
  g.action_space_size = j.at("action_space_size").get<int>();
  g.grid_w = j.at("grid_w").get<int>();
  g.grid_h = j.at("grid_h").get<int>();
  g.texture_level = j.at("texture_level").get<double>();
  g.reward_sparsity = j.at("reward_sparsity").get<int>();
  g.max_episode_len = j.at("max_episode_len").get<int>();
  g.fire_required = j.at("fire_required").get<bool>();
  g.seed = j.at("seed").get<uint64_t>();
  return g;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["profile"] = c.profile;
  j["global_seed"] = c.global_seed;
  Json suite = Json::array();
  for (const auto& g : c.suite) suite.push_back(spec_to_json(g));
  j["suite"] = suite;
  j["data"] = {{"episodes", c.data.episodes},
               {"policy_epsilon", c.data.policy_epsilon},
               {"sample_fraction", c.data.sample_fraction},
               {"clip_rewards", c.data.clip_rewards}};
  j["model"] = {{"n_layers", c.model.n_layers},
                {"d_model", c.model.d_model},
                {"n_heads", c.model.n_heads},
                {"ssm_state_dim", c.model.ssm_state_dim},
                {"conv_kernel", c.model.conv_kernel},
                {"expand_factor", c.model.expand_factor},
                {"dropout", c.model.dropout},
                {"max_timestep", c.model.max_timestep},
                {"timestep_embedding", c.model.timestep_embedding}};
  j["grid"] = {{"archs", c.grid.archs}, {"contexts", c.grid.contexts}, {"seeds", c.grid.seeds}};
  j["train"] = {{"lr", c.train.lr},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"weight_decay", c.train.weight_decay},
                {"grad_clip", c.train.grad_clip},
                {"warmup_tokens", c.train.warmup_tokens},
                {"max_epochs", c.train.max_epochs},
                {"batch_size", c.train.batch_size}};
  j["eval"] = {{"episodes", c.eval.episodes},
               {"target", c.eval.target},
               {"action_selection", c.eval.action_selection},
               {"temperature", c.eval.temperature},
               {"max_steps", c.eval.max_steps},
               {"baseline_episodes", c.eval.baseline_episodes}};
  j["analysis"] = {{"n_trees", c.analysis.n_trees},
                   {"k_folds", c.analysis.k_folds},
                   {"shap_permutations", c.analysis.shap_permutations}};
  j["stats_frames"] = c.stats_frames;
  return j;
}

RunConfig from_json(const Json& j) {
  RunConfig c;
  c.profile = j.value("profile", std::string("custom"));
  c.global_seed = j.value("global_seed", uint64_t{1});
  if (j.contains("suite"))
    for (const auto& g : j.at("suite")) c.suite.push_back(spec_from_json(g));
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.data.episodes = d.value("episodes", c.data.episodes);
    c.data.policy_epsilon = d.value("policy_epsilon", c.data.policy_epsilon);
    c.data.sample_fraction = d.value("sample_fraction", c.data.sample_fraction);
    c.data.clip_rewards = d.value("clip_rewards", c.data.clip_rewards);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model.n_layers = m.value("n_layers", c.model.n_layers);
    c.model.d_model = m.value("d_model", c.model.d_model);
    c.model.n_heads = m.value("n_heads", c.model.n_heads);
    c.model.ssm_state_dim = m.value("ssm_state_dim", c.model.ssm_state_dim);
    c.model.conv_kernel = m.value("conv_kernel", c.model.conv_kernel);
    c.model.expand_factor = m.value("expand_factor", c.model.expand_factor);
    c.model.dropout = m.value("dropout", c.model.dropout);
    c.model.max_timestep = m.value("max_timestep", c.model.max_timestep);
    c.model.timestep_embedding = m.value("timestep_embedding", c.model.timestep_embedding);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid.archs = g.value("archs", c.grid.archs);
    c.grid.contexts = g.value("contexts", c.grid.contexts);
    c.grid.seeds = g.value("seeds", c.grid.seeds);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.lr = t.value("lr", c.train.lr);
    c.train.beta1 = t.value("beta1", c.train.beta1);
    c.train.beta2 = t.value("beta2", c.train.beta2);
    c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
    c.train.grad_clip = t.value("grad_clip", c.train.grad_clip);
    c.train.warmup_tokens = t.value("warmup_tokens", c.train.warmup_tokens);
    c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    c.eval.episodes = e.value("episodes", c.eval.episodes);
    c.eval.target = e.value("target", c.eval.target);
    c.eval.action_selection = e.value("action_selection", c.eval.action_selection);
    c.eval.temperature = e.value("temperature", c.eval.temperature);
    c.eval.max_steps = e.value("max_steps", c.eval.max_steps);
    c.eval.baseline_episodes = e.value("baseline_episodes", c.eval.baseline_episodes);
  }
  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    c.analysis.n_trees = a.value("n_trees", c.analysis.n_trees);
    c.analysis.k_folds = a.value("k_folds", c.analysis.k_folds);
    c.analysis.shap_permutations = a.value("shap_permutations", c.analysis.shap_permutations);
  }
  c.stats_frames = j.value("stats_frames", c.stats_frames);
  return c;
}

}  // namespace

void RunConfig::validate() const {
  if (suite.empty()) throw ConfigError("run config has an empty suite");
  for (const auto& g : suite) g.validate();
  if (grid.archs.empty() || grid.contexts.empty() || grid.seeds.empty())
    throw ConfigError("model grid must list archs, contexts and seeds");
  for (const auto& a : grid.archs) arch_from_name(a);
  for (int k : grid.contexts)
    if (k < 1) throw ConfigError("context length must be >= 1");
  train.validate();
  if (eval.episodes < 1) throw ConfigError("eval episodes must be >= 1");
  if (eval.temperature <= 0.0) throw ConfigError("temperature must be > 0");
  if (eval.action_selection != "sample" && eval.action_selection != "argmax")
    throw ConfigError("action_selection must be sample or argmax");
  if (stats_frames < 1) throw ConfigError("stats_frames must be >= 1");
}

std::string RunConfig::canonical_json() const { return to_json(*this).dump(2); }

std::string RunConfig::config_hash() const { return hex64(fnv1a64(canonical_json())); }

RunConfig profile_config(const std::string& name) {
  RunConfig c;
  if (name == "paper") {
    c.profile = "paper";
    c.suite = default_suite();
    c.data.episodes = 200;
    c.model.n_layers = 6;
    c.model.d_model = 128;
    c.grid.contexts = {10, 30, 50};
    c.grid.seeds = {123, 132, 231};
    c.train.batch_size = 256;
    c.train.max_epochs = 5;
    c.eval.max_steps = 400;
  } else if (name == "ci") {
    c.profile = "ci";
    c.suite = ci_suite();
    c.data.episodes = 32;
    c.data.policy_epsilon = 0.3;
    c.model.n_layers = 2;
    c.model.d_model = 32;
    c.model.n_heads = 4;
    c.model.max_timestep = 64;
    c.grid.contexts = {10};
    c.grid.seeds = {123};
    c.train.batch_size = 32;
    c.train.max_epochs = 3;
    c.train.warmup_tokens = 2048;
    c.eval.episodes = 10;
    c.eval.max_steps = 48;
    c.eval.baseline_episodes = 100;
    c.analysis.n_trees = 200;
    c.analysis.k_folds = 3;
    c.analysis.shap_permutations = 100;
    c.stats_frames = 200;
  } else {
    throw ConfigError("unknown profile '" + name + "' (expected paper or ci)");
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  Json j = Json::parse(is, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("malformed config JSON: " + path);
  RunConfig c = from_json(j);
  c.validate();
  return c;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write config: " + path);
  os << cfg.canonical_json() << "\n";
}

}  // namespace sqrl
