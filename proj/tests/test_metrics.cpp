#include <doctest.h>

#include "goldens.hpp"
#include "sqrl/dataset_io.hpp"
#include "sqrl/metrics.hpp"
#include "sqrl/rng.hpp"

using namespace sqrl;

namespace {

Frame noise_frame(uint64_t seed) {
  Rng rng(seed);
  Frame f(kFramePixels);
  for (auto& px : f) px = static_cast<uint8_t>(rng.next_below(256));
  return f;
}

}  // namespace

TEST_CASE("image entropy on degenerate histograms") {
  Frame constant(kFramePixels, 57);
  CHECK(image_entropy(constant) == doctest::Approx(0.0));

  Frame two(kFramePixels, 0);
  for (int i = 0; i < kFramePixels / 2; ++i) two[static_cast<size_t>(i)] = 255;
  CHECK(image_entropy(two) == doctest::Approx(1.0).epsilon(1e-12));

  // 256x256 gradient: every intensity exactly 256 times -> 8 bits.
  std::vector<uint8_t> gradient(256 * 256);
  for (size_t i = 0; i < gradient.size(); ++i) gradient[i] = static_cast<uint8_t>(i / 256);
  CHECK(image_entropy(gradient.data(), gradient.size()) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("entropy is invariant to pixel permutation and bounded") {
  Frame f = noise_frame(5);
  double h = image_entropy(f);
  CHECK(h > 0.0);
  CHECK(h <= 8.0);
  Rng rng(6);
  Frame shuffled = f;
  rng.shuffle(shuffled);
  CHECK(image_entropy(shuffled) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("compression ratio separates constant from noise") {
  Frame constant(kFramePixels, 10);
  const double rc = compression_ratio(constant);
  CHECK(rc > 50.0);
  for (uint64_t seed = 0; seed < 8; ++seed) {
    const double rn = compression_ratio(noise_frame(seed));
    CHECK(rn < 1.2);
    CHECK(rc > rn);
  }
}

TEST_CASE("compression ratio golden values are bit-stable") {
  // Frozen from a reference run of DEFLATE level 6 in this build environment.
  Frame constant(kFramePixels, 10);
  auto comp = zlib_compress(constant.data(), constant.size(), 6);
  CHECK(comp.size() == SQRL_GOLDEN_CONSTANT_DEFLATE_BYTES);
  Frame noise = noise_frame(1);
  auto comp_noise = zlib_compress(noise.data(), noise.size(), 6);
  CHECK(comp_noise.size() == SQRL_GOLDEN_NOISE_DEFLATE_BYTES);
}

TEST_CASE("feature count: constant frame has no keypoints") {
  Frame constant(kFramePixels, 77);
  CHECK(feature_count(constant) == 0);
}

TEST_CASE("feature count: bright blob is detected and translation-covariant") {
  auto blob_frame = [](int cx, int cy) {
    Frame f(kFramePixels, 0);
    for (int y = cy - 2; y <= cy + 2; ++y)
      for (int x = cx - 2; x <= cx + 2; ++x) f[static_cast<size_t>(y * kFrameW + x)] = 255;
    return f;
  };
  const int at_center = feature_count(blob_frame(42, 42));
  CHECK(at_center >= 1);
  CHECK(at_center == SQRL_GOLDEN_BLOB_KEYPOINTS);
  // Shifting the blob by 8px in the frame interior preserves the count.
  CHECK(feature_count(blob_frame(50, 42)) == at_center);
  CHECK(feature_count(blob_frame(42, 34)) == at_center);
  CHECK(feature_count(blob_frame(34, 50)) == at_center);
}

TEST_CASE("feature count is deterministic") {
  Frame f = noise_frame(33);
  CHECK(feature_count(f) == feature_count(f));
}

TEST_CASE("aggregate_metrics is deterministic and handles constant data") {
  TrajectoryDataset ds;
  ds.game_name = "flat";
  ds.action_space_size = 4;
  ds.action_names = action_name_prefix(4);
  Episode e;
  for (int t = 0; t < 30; ++t) {
    e.frames.push_back(Frame(kFramePixels, 9));
    e.actions.push_back(0);
    e.rewards.push_back(t == 4 ? 1.0 : 0.0);
  }
  e.rtg = compute_rtg(e.rewards);
  ds.episodes.push_back(e);
  ds.recompute_derived();

  auto m1 = aggregate_metrics(ds, 10, 99);
  auto m2 = aggregate_metrics(ds, 10, 99);
  CHECK(m1.image_entropy == doctest::Approx(0.0));
  CHECK(m1.feature_count == doctest::Approx(0.0));
  CHECK(m1.compression_ratio > 50.0);
  CHECK(m1.avg_steps_first_reward == doctest::Approx(5.0));
  CHECK(m1.image_entropy == m2.image_entropy);
  CHECK(m1.compression_ratio == m2.compression_ratio);
  CHECK(m1.feature_count == m2.feature_count);
}
