#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqrl/trajectory.hpp"

namespace sqrl {

// One per-game characteristics row.
struct GameMetrics {
  std::string game;
  int num_actions = 0;
  double avg_traj_len = 0.0;
  double avg_steps_first_reward = 0.0;
  double image_entropy = 0.0;      // bits, in [0, 8]
  double compression_ratio = 0.0;  // raw bytes / DEFLATE bytes
  double feature_count = 0.0;      // mean keypoints per frame

  static const std::vector<std::string>& feature_names();  // the 6 numeric columns
  std::vector<double> feature_values() const;
};

// Shannon entropy of the 256-bin intensity histogram, log base 2.
double image_entropy(const uint8_t* pixels, size_t n);
inline double image_entropy(const Frame& f) { return image_entropy(f.data(), f.size()); }

// Raw size over zlib/DEFLATE(level 6) stream size.
double compression_ratio(const uint8_t* pixels, size_t n);
inline double compression_ratio(const Frame& f) { return compression_ratio(f.data(), f.size()); }

// Difference-of-Gaussians keypoint count: 3 octaves, 3 scales per octave,
// sigma0 = 1.6, k = 2^(1/3); a keypoint is a 3x3x3 local extremum with
// |DoG| > 0.03 on [0,1]-normalized intensities that passes the
// principal-curvature edge test (ratio < 10). Detection only, no
// orientation or descriptors.
struct DogParams {
  int octaves = 3;
  int scales_per_octave = 3;
  double sigma0 = 1.6;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
};

int feature_count(const uint8_t* pixels, int h, int w, const DogParams& params = {});
inline int feature_count(const Frame& f, const DogParams& params = {}) {
  return feature_count(f.data(), kFrameH, kFrameW, params);
}

// Metric fields are means over a seeded uniform sample of frames; the
// statistics fields come from dataset_statistics.
GameMetrics aggregate_metrics(const TrajectoryDataset& ds, size_t n_frames, uint64_t seed);

}  // namespace sqrl
