#include <doctest.h>

#include "sqrl/fusion.hpp"

using namespace sqrl;

namespace {

// The Hero tail-distribution fixture (percentages; normalized on use).
const std::vector<double> kHeroTail = {4.56, 4.74, 3.37, 6.74, 5.67, 5.14, 4.09, 4.27, 6.69,
                                       5.94, 3.48, 8.11, 6.83, 5.62, 4.65, 4.45, 8.71, 6.93};

std::vector<std::string> kfm_names() {
  return {"NOOP", "UP", "RIGHT", "LEFT", "DOWN", "DOWNRIGHT", "DOWNLEFT",
          "RIGHTFIRE", "LEFTFIRE", "DOWNFIRE", "UPRIGHTFIRE", "UPLEFTFIRE",
          "DOWNRIGHTFIRE", "DOWNLEFTFIRE"};
}

}  // namespace

TEST_CASE("simple fusion: full 18-action set folds to 10 groups") {
  auto map = simple_fusion_map(action_name_prefix(18));
  REQUIRE(map.fused_count() == 10);
  using G = std::vector<int>;
  CHECK(map.groups[0] == G{0});       // NOOP
  CHECK(map.groups[1] == G{1});       // FIRE
  CHECK(map.groups[2] == G{2, 10});   // UP, UPFIRE
  CHECK(map.groups[3] == G{3, 11});   // RIGHT, RIGHTFIRE
  CHECK(map.groups[4] == G{4, 12});   // LEFT, LEFTFIRE
  CHECK(map.groups[5] == G{5, 13});   // DOWN, DOWNFIRE
  CHECK(map.groups[6] == G{6, 14});   // UPRIGHT, UPRIGHTFIRE
  CHECK(map.groups[7] == G{7, 15});   // UPLEFT, UPLEFTFIRE
  CHECK(map.groups[8] == G{8, 16});   // DOWNRIGHT, DOWNRIGHTFIRE
  CHECK(map.groups[9] == G{9, 17});   // DOWNLEFT, DOWNLEFTFIRE
}

TEST_CASE("simple fusion: 14-action set folds to 9 groups") {
  auto map = simple_fusion_map(kfm_names());
  REQUIRE(map.fused_count() == 9);
  using G = std::vector<int>;
  CHECK(map.groups[0] == G{0});        // NOOP
  CHECK(map.groups[1] == G{1});        // UP (no UPFIRE present)
  CHECK(map.groups[2] == G{2, 7});     // RIGHT, RIGHTFIRE
  CHECK(map.groups[3] == G{3, 8});     // LEFT, LEFTFIRE
  CHECK(map.groups[4] == G{4, 9});     // DOWN, DOWNFIRE
  CHECK(map.groups[5] == G{5, 12});    // DOWNRIGHT, DOWNRIGHTFIRE
  CHECK(map.groups[6] == G{6, 13});    // DOWNLEFT, DOWNLEFTFIRE
  CHECK(map.groups[7] == G{10});       // UPRIGHTFIRE, bare absent
  CHECK(map.groups[8] == G{11});       // UPLEFTFIRE, bare absent
}

TEST_CASE("simple fusion: NOOP and FIRE only is the identity") {
  auto map = simple_fusion_map({"NOOP", "FIRE"});
  REQUIRE(map.fused_count() == 2);
  CHECK(map.groups[0] == std::vector<int>{0});
  CHECK(map.groups[1] == std::vector<int>{1});
  CHECK_THROWS_AS(simple_fusion_map({"NOOP", "WARP"}), DataError);
}

TEST_CASE("frequency fusion merges the least-frequent pair first") {
  // Smallest pair in the Hero tail distribution is UP (3.37) and UPFIRE (3.48).
  auto map = frequency_fusion_map(action_name_prefix(18), kHeroTail, 17);
  bool found = false;
  for (const auto& g : map.groups)
    if (g == std::vector<int>{2, 10}) found = true;
  CHECK(found);
  CHECK(map.fused_count() == 17);
}

TEST_CASE("frequency fusion basics") {
  std::vector<std::string> names = {"NOOP", "FIRE", "UP", "RIGHT"};
  auto map = frequency_fusion_map(names, {.4, .3, .2, .1}, 3);
  REQUIRE(map.fused_count() == 3);
  CHECK(map.groups[0] == std::vector<int>{0});
  CHECK(map.groups[1] == std::vector<int>{1});
  CHECK(map.groups[2] == std::vector<int>{2, 3});

  auto identity = frequency_fusion_map(names, {.4, .3, .2, .1}, 4);
  CHECK(identity.fused_count() == 4);
  CHECK_THROWS_AS(frequency_fusion_map(names, {.4, .3, .2, .1}, 0), ConfigError);
}

TEST_CASE("last percent distribution sums to one and reads the tail") {
  TrajectoryDataset ds;
  ds.game_name = "tail";
  ds.action_space_size = 4;
  ds.action_names = action_name_prefix(4);
  Episode e;
  for (int t = 0; t < 100; ++t) {
    e.frames.push_back(Frame(kFramePixels, 0));
    e.actions.push_back(t < 99 ? 0 : 3);  // tail transition uses action 3
    e.rewards.push_back(0.0);
  }
  e.rtg = compute_rtg(e.rewards);
  ds.episodes.push_back(std::move(e));
  ds.recompute_derived();

  auto freq = last_percent_distribution(ds, 0.01);  // ceil(1) = 1 transition
  CHECK(freq[3] == doctest::Approx(1.0));
  double total = 0.0;
  for (double f : freq) total += f;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("relabel and defuse round-trip membership") {
  TrajectoryDataset ds;
  ds.game_name = "fuse";
  ds.action_space_size = 18;
  ds.action_names = action_name_prefix(18);
  Episode e;
  for (int a = 0; a < 18; ++a) {
    e.frames.push_back(Frame(kFramePixels, static_cast<uint8_t>(a)));
    e.actions.push_back(a);
    e.rewards.push_back(static_cast<double>(a % 2));
  }
  e.rtg = compute_rtg(e.rewards);
  ds.episodes.push_back(std::move(e));
  ds.recompute_derived();

  auto map = simple_fusion_map(ds.action_names);
  auto fused = relabel_dataset(ds, map);
  CHECK(fused.action_space_size == 10);
  CHECK(fused.episodes[0].frames == ds.episodes[0].frames);
  CHECK(fused.episodes[0].rewards == ds.episodes[0].rewards);
  // UPFIRE (10) relabels to the UP group, fused id 2.
  CHECK(fused.episodes[0].actions[10] == 2);
  for (int a = 0; a < 18; ++a) {
    const int fid = fused.episodes[0].actions[static_cast<size_t>(a)];
    const auto& group = map.groups[static_cast<size_t>(fid)];
    CHECK(std::find(group.begin(), group.end(), a) != group.end());
  }

  auto identity = identity_fusion_map(ds.action_names);
  auto same = relabel_dataset(ds, identity);
  CHECK(same.episodes[0].actions == ds.episodes[0].actions);
}

TEST_CASE("defuse modes") {
  auto map = simple_fusion_map(action_name_prefix(18));
  CHECK(defuse_action(0, map, DefuseMode::kFirst) == 0);
  CHECK(defuse_action(2, map, DefuseMode::kFirst) == 2);  // [UP, UPFIRE] -> UP
  Rng r1(9), r2(9);
  for (int i = 0; i < 20; ++i) {
    int a = defuse_action(2, map, DefuseMode::kUniform, &r1);
    int b = defuse_action(2, map, DefuseMode::kUniform, &r2);
    CHECK(a == b);
    CHECK((a == 2 || a == 10));
  }
  CHECK_THROWS_AS(defuse_action(99, map, DefuseMode::kFirst), DataError);
}

TEST_CASE("fusion maps serialize to JSON and back, overlap allowed on load") {
  auto map = simple_fusion_map(action_name_prefix(18));
  auto back = FusionMap::from_json(map.to_json());
  CHECK(back.groups == map.groups);
  CHECK(back.action_names == map.action_names);

  // Overlapping groups (as in loaded files) pass validation; the first group
  // containing a primitive wins at relabel time.
  FusionMap overlap;
  overlap.strategy = "file";
  overlap.action_names = action_name_prefix(4);
  overlap.groups = {{0, 2}, {1, 2}, {3}};
  overlap.validate();
  CHECK(overlap.fused_id_of(2) == 0);
}
