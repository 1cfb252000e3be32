#include "sqrl/batch.hpp"

#include <cstring>

namespace sqrl {

void fill_frame_stack(const Episode& e, int t, uint8_t* dst) {
  for (int s = 0; s < kFrameStack; ++s) {
    int src_t = t - (kFrameStack - 1) + s;
    if (src_t < 0) src_t = 0;
    std::memcpy(dst + static_cast<size_t>(s) * kFramePixels, e.frames[static_cast<size_t>(src_t)].data(),
                kFramePixels);
  }
}

BatchStream::BatchStream(const TrajectoryDataset& ds, int context, int batch_size, uint64_t seed)
    : ds_(&ds), context_(context), batch_size_(batch_size) {
  if (context < 1) throw ConfigError("context must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (ds.episodes.empty()) throw DataError("make_batches on empty dataset");
  order_.reserve(ds.total_transitions());
  for (uint32_t ep = 0; ep < ds.episodes.size(); ++ep)
    for (uint32_t end = 0; end < ds.episodes[ep].length(); ++end) order_.emplace_back(ep, end);
  Rng rng(seed);
  rng.shuffle(order_);
}

std::optional<SequenceBatch> BatchStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const size_t remaining = order_.size() - cursor_;
  const int b_size = static_cast<int>(std::min<size_t>(remaining, static_cast<size_t>(batch_size_)));

  SequenceBatch batch;
  batch.batch = b_size;
  batch.context = context_;
  const size_t bk = static_cast<size_t>(b_size) * context_;
  batch.rtg.assign(bk, 0.0);
  batch.states.assign(bk * kFrameStack * kFramePixels, 0);
  batch.actions.assign(bk, 0);
  batch.timesteps.assign(bk, 0);
  batch.targets.assign(bk, 0);
  batch.pad_mask.assign(bk, 1);

  for (int b = 0; b < b_size; ++b) {
    auto [ep_idx, end] = order_[cursor_ + static_cast<size_t>(b)];
    const Episode& e = ds_->episodes[ep_idx];
    const int start = static_cast<int>(end) - (context_ - 1);
    for (int k = 0; k < context_; ++k) {
      const int t = start + k;
      if (t < 0) continue;  // left padding
      const size_t i = batch.idx(b, k);
      batch.rtg[i] = e.rtg[static_cast<size_t>(t)];
      batch.actions[i] = e.actions[static_cast<size_t>(t)];
      batch.targets[i] = e.actions[static_cast<size_t>(t)];
      batch.timesteps[i] = t;
      batch.pad_mask[i] = 0;
      fill_frame_stack(e, t, batch.states.data() + batch.state_offset(b, k));
    }
  }
  cursor_ += static_cast<size_t>(b_size);
  return batch;
}

uint64_t epoch_token_count(const TrajectoryDataset& ds, int context) {
  uint64_t tokens = 0;
  const uint64_t k = static_cast<uint64_t>(context);
  for (const auto& e : ds.episodes) {
    const uint64_t len = e.length();
    // Windows ending at t contribute min(t+1, K) unpadded positions.
    if (len >= k)
      tokens += k * len - k * (k - 1) / 2;
    else
      tokens += len * (len + 1) / 2;
  }
  return tokens;
}

}  // namespace sqrl
