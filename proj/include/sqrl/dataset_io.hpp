#pragma once

#include <string>

#include "sqrl/trajectory.hpp"

namespace sqrl {

// Binary trajectory container, little-endian:
//   magic "SQRL", version u32=1,
//   game_name (u16 length + UTF-8), action_space_size u16, episode_count u32,
//   per episode: length u32,
//                frame block: u32 compressed length + zlib/DEFLATE bytes
//                  (raw layout: length * 84 * 84 u8, row-major),
//                actions: length * u8,
//                rewards: length * f32.
// An optional trailer (u16 length + UTF-8 JSON, e.g. {"config_hash":...})
// may follow the last episode; readers tolerate its absence. RTG is always
// recomputed on load.
void write_dataset(const TrajectoryDataset& ds, const std::string& path,
                   const std::string& trailer_json = "");
TrajectoryDataset read_dataset(const std::string& path, std::string* trailer_json = nullptr);

// Debug format: JSON lines, one episode object per line. Every line repeats
// game_name / action_space_size so lines stand alone.
void write_dataset_jsonl(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset read_dataset_jsonl(const std::string& path);

// zlib helpers shared with the compression-ratio metric.
std::vector<uint8_t> zlib_compress(const uint8_t* data, size_t n, int level);
std::vector<uint8_t> zlib_decompress(const uint8_t* data, size_t n, size_t expected_size);

}  // namespace sqrl
