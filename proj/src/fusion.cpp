#include "sqrl/fusion.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "sqrl/actions.hpp"

namespace sqrl {

int FusionMap::fused_id_of(int primitive) const {
  for (size_t g = 0; g < groups.size(); ++g)
    for (int p : groups[g])
      if (p == primitive) return static_cast<int>(g);
  return -1;
}

void FusionMap::validate() const {
  if (groups.empty()) throw DataError("fusion map has no groups");
  const int m = primitive_count();
  for (const auto& g : groups) {
    if (g.empty()) throw DataError("fusion map has an empty group");
    for (int p : g)
      if (p < 0 || p >= m) throw DataError("fusion map references primitive id out of range");
  }
  for (int p = 0; p < m; ++p)
    if (fused_id_of(p) < 0)
      throw DataError("fusion map does not cover primitive " + action_names[static_cast<size_t>(p)]);
}

std::string FusionMap::to_json() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  j["action_names"] = action_names;
  j["groups"] = groups;
  return j.dump(2);
}

FusionMap FusionMap::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw DataError("malformed fusion map JSON");
  FusionMap map;
  map.strategy = j.value("strategy", std::string("file"));
  map.action_names = j.at("action_names").get<std::vector<std::string>>();
  map.groups = j.at("groups").get<std::vector<std::vector<int>>>();
  for (const auto& name : map.action_names)
    if (action_id_of(name) < 0) throw DataError("unknown action name in fusion map: " + name);
  map.validate();
  return map;
}

FusionMap identity_fusion_map(const std::vector<std::string>& action_names) {
  FusionMap map;
  map.strategy = "identity";
  map.action_names = action_names;
  for (int p = 0; p < static_cast<int>(action_names.size()); ++p) map.groups.push_back({p});
  return map;
}

FusionMap simple_fusion_map(const std::vector<std::string>& action_names) {
  const int m = static_cast<int>(action_names.size());
  auto local_id = [&](const std::string& name) {
    for (int i = 0; i < m; ++i)
      if (action_names[static_cast<size_t>(i)] == name) return i;
    return -1;
  };
  FusionMap map;
  map.strategy = "simple";
  map.action_names = action_names;
  std::vector<bool> consumed(static_cast<size_t>(m), false);
  for (int p = 0; p < m; ++p) {
    if (consumed[static_cast<size_t>(p)]) continue;
    const std::string& name = action_names[static_cast<size_t>(p)];
    if (action_id_of(name) < 0) throw DataError("unknown action name: " + name);
    if (name == "NOOP" || name == "FIRE") {
      map.groups.push_back({p});
      continue;
    }
    const bool is_composite = name.size() > 4 && name.ends_with("FIRE");
    if (!is_composite) {
      int partner = local_id(name + "FIRE");
      if (partner >= 0) {
        map.groups.push_back({p, partner});
        consumed[static_cast<size_t>(partner)] = true;
      } else {
        map.groups.push_back({p});
      }
    } else {
      // Composite whose bare movement is absent stays singleton; otherwise it
      // was consumed above.
      map.groups.push_back({p});
    }
  }
  map.validate();
  return map;
}

std::vector<double> last_percent_distribution(const TrajectoryDataset& ds, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction out of (0,1]");
  const size_t total = ds.total_transitions();
  if (total == 0) throw DataError("empty dataset");
  size_t tail = static_cast<size_t>(std::ceil(fraction * static_cast<double>(total)));
  if (tail == 0) throw DataError("empty tail");
  std::vector<double> freq(static_cast<size_t>(ds.action_space_size), 0.0);
  size_t remaining = tail;
  for (size_t ei = ds.episodes.size(); ei-- > 0 && remaining > 0;) {
    const auto& e = ds.episodes[ei];
    size_t take = std::min(remaining, e.length());
    for (size_t t = e.length() - take; t < e.length(); ++t)
      freq[static_cast<size_t>(e.actions[t])] += 1.0;
    remaining -= take;
  }
  for (auto& f : freq) f /= static_cast<double>(tail);
  return freq;
}

FusionMap frequency_fusion_map(const std::vector<std::string>& action_names,
                               const std::vector<double>& distribution, int target_count) {
  const int m = static_cast<int>(action_names.size());
  if (static_cast<int>(distribution.size()) != m) throw ConfigError("distribution length mismatch");
  if (target_count < 1) throw ConfigError("target_count must be >= 1");
  if (target_count >= m) {
    if (target_count > m) throw ConfigError("target_count exceeds action count");
    FusionMap map = identity_fusion_map(action_names);
    map.strategy = "frequency";
    return map;
  }

  struct Group {
    std::vector<int> ids;  // ascending
    double freq;
  };
  std::vector<Group> groups;
  for (int p = 0; p < m; ++p) groups.push_back({{p}, distribution[static_cast<size_t>(p)]});

  auto pick_min = [&](int exclude) {
    int best = -1;
    for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
      if (g == exclude) continue;
      if (best < 0 || groups[static_cast<size_t>(g)].freq < groups[static_cast<size_t>(best)].freq ||
          (groups[static_cast<size_t>(g)].freq == groups[static_cast<size_t>(best)].freq &&
           groups[static_cast<size_t>(g)].ids[0] < groups[static_cast<size_t>(best)].ids[0]))
        best = g;
    }
    return best;
  };

  while (static_cast<int>(groups.size()) > target_count) {
    int a = pick_min(-1);
    int b = pick_min(a);
    Group& ga = groups[static_cast<size_t>(std::min(a, b))];
    Group gb = groups[static_cast<size_t>(std::max(a, b))];
    ga.freq += gb.freq;
    ga.ids.insert(ga.ids.end(), gb.ids.begin(), gb.ids.end());
    std::sort(ga.ids.begin(), ga.ids.end());
    groups.erase(groups.begin() + std::max(a, b));
  }

  std::sort(groups.begin(), groups.end(), [](const Group& x, const Group& y) { return x.ids[0] < y.ids[0]; });
  FusionMap map;
  map.strategy = "frequency";
  map.action_names = action_names;
  for (auto& g : groups) map.groups.push_back(std::move(g.ids));
  map.validate();
  return map;
}

TrajectoryDataset relabel_dataset(const TrajectoryDataset& ds, const FusionMap& map) {
  map.validate();
  if (map.primitive_count() != ds.action_space_size)
    throw DataError("fusion map primitive count does not match dataset action space");
  if (map.fused_count() < 2) throw DataError("relabel needs at least 2 fused groups");
  TrajectoryDataset out = ds;
  out.action_space_size = map.fused_count();
  // The container never stores names, so the canonical prefix stands in for
  // the fused ids here.
  out.action_names = action_name_prefix(map.fused_count());
  std::vector<int> lut(static_cast<size_t>(map.primitive_count()));
  for (int p = 0; p < map.primitive_count(); ++p) lut[static_cast<size_t>(p)] = map.fused_id_of(p);
  for (auto& e : out.episodes)
    for (auto& a : e.actions) a = lut[static_cast<size_t>(a)];
  out.recompute_derived();
  return out;
}

int defuse_action(int fused_id, const FusionMap& map, DefuseMode mode, Rng* rng) {
  if (fused_id < 0 || fused_id >= map.fused_count()) throw DataError("invalid fused action id");
  const auto& group = map.groups[static_cast<size_t>(fused_id)];
  if (mode == DefuseMode::kFirst || group.size() == 1) return group[0];
  if (!rng) throw ConfigError("uniform defuse requires an rng");
  return group[rng->next_below(group.size())];
}

}  // namespace sqrl
