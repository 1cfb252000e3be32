#pragma once

#include <memory>
#include <string>

#include "sqrl/nn/model.hpp"

namespace sqrl {

struct CheckpointMeta {
  std::string game;
  double max_return = 0.0;
  uint64_t train_seed = 0;
  std::string config_hash;
  std::string fusion_map_json;  // empty when the action space is unfused
};

// Container: magic "SQCK", version u32=1, u32 JSON header length, JSON header
// (model config, meta, tensor table with byte offsets), then one raw
// little-endian f32 blob holding every tensor at its stated offset.
void save_checkpoint(const nn::SequenceModel<float>& model, const CheckpointMeta& meta,
                     const std::string& path);

struct LoadedCheckpoint {
  ModelConfig config;
  CheckpointMeta meta;
  std::unique_ptr<nn::SequenceModel<float>> model;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sqrl
