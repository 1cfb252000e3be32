#pragma once

#include <string>
#include <vector>

#include "sqrl/rng.hpp"
#include "sqrl/trajectory.hpp"

namespace sqrl {

// Fused action space: each fused id names a group of primitive ids. Maps we
// generate are disjoint partitions; maps loaded from files may overlap, in
// which case the first group containing a primitive wins.
struct FusionMap {
  std::string strategy;                       // "simple" | "frequency" | "file" | "identity"
  std::vector<std::string> action_names;      // primitive names, canonical prefix
  std::vector<std::vector<int>> groups;       // groups[fused_id] = primitive ids

  int primitive_count() const { return static_cast<int>(action_names.size()); }
  int fused_count() const { return static_cast<int>(groups.size()); }
  // Fused id of a primitive (first matching group).
  int fused_id_of(int primitive) const;
  void validate() const;  // coverage of all primitives

  std::string to_json() const;
  static FusionMap from_json(const std::string& text);
};

FusionMap identity_fusion_map(const std::vector<std::string>& action_names);

// NOOP and FIRE stay singletons; each bare movement pairs with its FIRE
// composite when both exist; composites without a bare counterpart stay
// singleton. Fused ids in first-occurrence order.
FusionMap simple_fusion_map(const std::vector<std::string>& action_names);

// Frequencies over the final ceil(fraction * total) transitions, in
// collection order. Sums to 1.
std::vector<double> last_percent_distribution(const TrajectoryDataset& ds, double fraction = 0.01);

// Greedy merging of the two least-frequent groups until target_count groups
// remain. Ties break toward the group with the lowest primitive id. Groups
// are reported sorted by their lowest primitive id.
FusionMap frequency_fusion_map(const std::vector<std::string>& action_names,
                               const std::vector<double>& distribution, int target_count);

// Replaces each primitive action with its fused id; frames and rewards are
// untouched; action_space_size becomes the group count.
TrajectoryDataset relabel_dataset(const TrajectoryDataset& ds, const FusionMap& map);

enum class DefuseMode { kFirst, kUniform };

int defuse_action(int fused_id, const FusionMap& map, DefuseMode mode, Rng* rng = nullptr);

}  // namespace sqrl
