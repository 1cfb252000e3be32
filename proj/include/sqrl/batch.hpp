#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sqrl/rng.hpp"
#include "sqrl/trajectory.hpp"

namespace sqrl {

// One training batch of K-step windows. States are 4-frame stacks assembled
// at sampling time; windows that begin before the episode start are
// left-padded (pad_mask = true) and those positions are excluded from loss.
struct SequenceBatch {
  int batch = 0;
  int context = 0;
  std::vector<double> rtg;        // [B,K]
  std::vector<uint8_t> states;    // [B,K,4,84,84]
  std::vector<int> actions;       // [B,K]
  std::vector<int> timesteps;     // [B,K] absolute episode step of each triplet
  std::vector<int> targets;       // [B,K] == actions
  std::vector<uint8_t> pad_mask;  // [B,K], 1 = padded

  size_t idx(int b, int k) const { return static_cast<size_t>(b) * context + k; }
  size_t state_offset(int b, int k) const {
    return (static_cast<size_t>(b) * context + k) * kFrameStack * kFramePixels;
  }
  int real_positions() const {
    int n = 0;
    for (uint8_t m : pad_mask) n += (m == 0);
    return n;
  }
};

// Copies the 4-frame stack for step t of an episode into dst
// (kFrameStack * kFramePixels bytes), repeating frame 0 before episode start.
void fill_frame_stack(const Episode& e, int t, uint8_t* dst);

// Streams one epoch of batches: every (episode, end-offset) pair appears
// exactly once, in an order shuffled by the seed. Each window covers the K
// steps ending at its end offset.
class BatchStream {
 public:
  BatchStream(const TrajectoryDataset& ds, int context, int batch_size, uint64_t seed);

  std::optional<SequenceBatch> next();
  size_t total_windows() const { return order_.size(); }
  size_t batches_per_epoch() const {
    return (order_.size() + static_cast<size_t>(batch_size_) - 1) / static_cast<size_t>(batch_size_);
  }

 private:
  const TrajectoryDataset* ds_;
  int context_;
  int batch_size_;
  std::vector<std::pair<uint32_t, uint32_t>> order_;  // (episode, end offset)
  size_t cursor_ = 0;
};

// Sum over all windows of their unpadded length; the token budget of one
// epoch, used by the learning-rate schedule.
uint64_t epoch_token_count(const TrajectoryDataset& ds, int context);

}  // namespace sqrl
