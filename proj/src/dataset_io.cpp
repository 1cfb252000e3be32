#include "sqrl/dataset_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace sqrl {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'R', 'L'};
constexpr uint32_t kVersion = 1;
constexpr int kContainerZlibLevel = 6;

void put_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}
void put_f32(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(os, u);
}
bool get_bytes(std::istream& is, void* dst, size_t n) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<size_t>(is.gcount()) == n;
}
uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  if (!get_bytes(is, b, 2)) throw DataError("truncated dataset container");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!get_bytes(is, b, 4)) throw DataError("truncated dataset container");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
float get_f32(std::istream& is) {
  uint32_t u = get_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

std::vector<uint8_t> zlib_compress(const uint8_t* data, size_t n, int level) {
  uLongf cap = compressBound(static_cast<uLong>(n));
  std::vector<uint8_t> out(cap);
  int rc = compress2(out.data(), &cap, data, static_cast<uLong>(n), level);
  if (rc != Z_OK) throw NumericError("zlib compress failed, rc=" + std::to_string(rc));
  out.resize(cap);
  return out;
}

std::vector<uint8_t> zlib_decompress(const uint8_t* data, size_t n, size_t expected_size) {
  std::vector<uint8_t> out(expected_size);
  uLongf got = static_cast<uLongf>(expected_size);
  int rc = uncompress(out.data(), &got, data, static_cast<uLong>(n));
  if (rc != Z_OK || got != expected_size)
    throw DataError("zlib decompress failed or size mismatch, rc=" + std::to_string(rc));
  return out;
}

void write_dataset(const TrajectoryDataset& ds, const std::string& path, const std::string& trailer_json) {
  ds.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for write: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  if (ds.game_name.size() > 0xffff) throw DataError("game_name too long");
  put_u16(os, static_cast<uint16_t>(ds.game_name.size()));
  os.write(ds.game_name.data(), static_cast<std::streamsize>(ds.game_name.size()));
  put_u16(os, static_cast<uint16_t>(ds.action_space_size));
  put_u32(os, static_cast<uint32_t>(ds.episodes.size()));
  std::vector<uint8_t> raw;
  for (const auto& e : ds.episodes) {
    const uint32_t len = static_cast<uint32_t>(e.length());
    put_u32(os, len);
    raw.resize(static_cast<size_t>(len) * kFramePixels);
    for (uint32_t t = 0; t < len; ++t)
      std::memcpy(raw.data() + static_cast<size_t>(t) * kFramePixels, e.frames[t].data(), kFramePixels);
    auto comp = zlib_compress(raw.data(), raw.size(), kContainerZlibLevel);
    put_u32(os, static_cast<uint32_t>(comp.size()));
    os.write(reinterpret_cast<const char*>(comp.data()), static_cast<std::streamsize>(comp.size()));
    for (uint32_t t = 0; t < len; ++t) os.put(static_cast<char>(static_cast<uint8_t>(e.actions[t])));
    for (uint32_t t = 0; t < len; ++t) put_f32(os, static_cast<float>(e.rewards[t]));
  }
  if (!trailer_json.empty()) {
    if (trailer_json.size() > 0xffff) throw DataError("trailer too long");
    put_u16(os, static_cast<uint16_t>(trailer_json.size()));
    os.write(trailer_json.data(), static_cast<std::streamsize>(trailer_json.size()));
  }
  if (!os) throw DataError("write failed: " + path);
}

TrajectoryDataset read_dataset(const std::string& path, std::string* trailer_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset: " + path);
  char magic[4];
  if (!get_bytes(is, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in dataset: " + path);
  uint32_t version = get_u32(is);
  if (version != kVersion) throw DataError("unsupported container version " + std::to_string(version));
  TrajectoryDataset ds;
  uint16_t name_len = get_u16(is);
  ds.game_name.resize(name_len);
  if (name_len && !get_bytes(is, ds.game_name.data(), name_len)) throw DataError("truncated dataset container");
  ds.action_space_size = get_u16(is);
  ds.action_names = action_name_prefix(ds.action_space_size);
  uint32_t n_episodes = get_u32(is);
  ds.episodes.resize(n_episodes);
  for (uint32_t i = 0; i < n_episodes; ++i) {
    Episode& e = ds.episodes[i];
    uint32_t len = get_u32(is);
    if (len == 0) throw DataError("episode " + std::to_string(i) + " has zero length");
    uint32_t comp_len = get_u32(is);
    std::vector<uint8_t> comp(comp_len);
    if (comp_len && !get_bytes(is, comp.data(), comp_len)) throw DataError("truncated frame block");
    auto raw = zlib_decompress(comp.data(), comp.size(), static_cast<size_t>(len) * kFramePixels);
    e.frames.resize(len);
    for (uint32_t t = 0; t < len; ++t) {
      e.frames[t].assign(raw.begin() + static_cast<long>(t) * kFramePixels,
                         raw.begin() + static_cast<long>(t + 1) * kFramePixels);
    }
    e.actions.resize(len);
    for (uint32_t t = 0; t < len; ++t) {
      char c;
      if (!get_bytes(is, &c, 1)) throw DataError("truncated action block");
      e.actions[t] = static_cast<uint8_t>(c);
    }
    e.rewards.resize(len);
    for (uint32_t t = 0; t < len; ++t) e.rewards[t] = static_cast<double>(get_f32(is));
  }
  // Optional trailer.
  if (trailer_json) trailer_json->clear();
  unsigned char tb[2];
  is.read(reinterpret_cast<char*>(tb), 2);
  if (is.gcount() == 2) {
    uint16_t tlen = static_cast<uint16_t>(tb[0] | (tb[1] << 8));
    std::string t(tlen, '\0');
    if (tlen && !get_bytes(is, t.data(), tlen)) throw DataError("truncated trailer");
    if (trailer_json) *trailer_json = t;
  }
  ds.recompute_derived();
  ds.validate();
  return ds;
}

void write_dataset_jsonl(const TrajectoryDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open for write: " + path);
  for (const auto& e : ds.episodes) {
    using Json = nlohmann::ordered_json;
    Json j;
    j["game_name"] = ds.game_name;
    j["action_space_size"] = ds.action_space_size;
    auto& frames = j["frames"] = Json::array();
    for (const auto& f : e.frames) {
      Json rows = Json::array();
      for (int y = 0; y < kFrameH; ++y) {
        Json row = Json::array();
        for (int x = 0; x < kFrameW; ++x) row.push_back(static_cast<int>(f[static_cast<size_t>(y * kFrameW + x)]));
        rows.push_back(std::move(row));
      }
      frames.push_back(std::move(rows));
    }
    j["actions"] = e.actions;
    j["rewards"] = e.rewards;
    os << j.dump() << "\n";
  }
  if (!os) throw DataError("write failed: " + path);
}

TrajectoryDataset read_dataset_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset: " + path);
  TrajectoryDataset ds;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw DataError("malformed JSON line in " + path);
    if (first) {
      ds.game_name = j.at("game_name").get<std::string>();
      ds.action_space_size = j.at("action_space_size").get<int>();
      ds.action_names = action_name_prefix(ds.action_space_size);
      first = false;
    }
    Episode e;
    for (const auto& fr : j.at("frames")) {
      Frame f(kFramePixels);
      int y = 0;
      for (const auto& row : fr) {
        int x = 0;
        for (const auto& px : row) f[static_cast<size_t>(y * kFrameW + x++)] = static_cast<uint8_t>(px.get<int>());
        ++y;
      }
      e.frames.push_back(std::move(f));
    }
    e.actions = j.at("actions").get<std::vector<int>>();
    e.rewards = j.at("rewards").get<std::vector<double>>();
    ds.episodes.push_back(std::move(e));
  }
  if (first) throw DataError("empty JSONL dataset: " + path);
  ds.recompute_derived();
  ds.validate();
  return ds;
}

}  // namespace sqrl
