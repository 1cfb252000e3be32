#include "sqrl/nn/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace sqrl {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'Q', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw DataError("truncated checkpoint");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

Json model_config_json(const ModelConfig& c) {
  Json j;
  j["arch"] = arch_name(c.arch);
  j["n_layers"] = c.n_layers;
  j["d_model"] = c.d_model;
  j["context"] = c.context;
  j["n_heads"] = c.n_heads;
  j["ssm_state_dim"] = c.ssm_state_dim;
  j["conv_kernel"] = c.conv_kernel;
  j["expand_factor"] = c.expand_factor;
  j["dropout"] = c.dropout;
  j["action_space_size"] = c.action_space_size;
  j["max_timestep"] = c.max_timestep;
  j["timestep_embedding"] = c.timestep_embedding;
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.arch = arch_from_name(j.at("arch").get<std::string>());
  c.n_layers = j.at("n_layers").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.context = j.at("context").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.ssm_state_dim = j.at("ssm_state_dim").get<int>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.expand_factor = j.at("expand_factor").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.action_space_size = j.at("action_space_size").get<int>();
  c.max_timestep = j.at("max_timestep").get<int>();
  c.timestep_embedding = j.at("timestep_embedding").get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const nn::SequenceModel<float>& model, const CheckpointMeta& meta,
                     const std::string& path) {
  Json header;
  header["version"] = kVersion;
  header["model"] = model_config_json(model.config());
  Json meta_j;
  meta_j["game"] = meta.game;
  meta_j["max_return"] = meta.max_return;
  meta_j["train_seed"] = meta.train_seed;
  meta_j["config_hash"] = meta.config_hash;
  if (!meta.fusion_map_json.empty()) meta_j["fusion_map"] = Json::parse(meta.fusion_map_json);
  header["meta"] = meta_j;

  Json tensors = Json::array();
  uint64_t offset = 0;
  for (const auto* p : model.params()) {
    Json t;
    t["name"] = p->name;
    t["shape"] = p->shape;
    t["offset"] = offset;
    t["count"] = p->size();
    tensors.push_back(std::move(t));
    offset += p->size() * sizeof(float);
  }
  header["tensors"] = std::move(tensors);
  const std::string header_str = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for write: " + tmp);
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<uint32_t>(header_str.size()));
    os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    static_assert(sizeof(float) == 4);
    for (const auto* p : model.params())
      os.write(reinterpret_cast<const char*>(p->w.data()),
               static_cast<std::streamsize>(p->w.size() * sizeof(float)));
    if (!os) throw DataError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("rename failed for " + path + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in checkpoint: " + path);
  const uint32_t version = get_u32(is);
  if (version != kVersion) throw DataError("unsupported checkpoint version");
  const uint32_t header_len = get_u32(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), header_len);
  if (static_cast<uint32_t>(is.gcount()) != header_len) throw DataError("truncated checkpoint header");
  Json header = Json::parse(header_str, nullptr, false);
  if (header.is_discarded()) throw DataError("malformed checkpoint header JSON");

  LoadedCheckpoint out;
  out.config = model_config_from_json(header.at("model"));
  const auto& meta_j = header.at("meta");
  out.meta.game = meta_j.value("game", std::string());
  out.meta.max_return = meta_j.value("max_return", 0.0);
  out.meta.train_seed = meta_j.value("train_seed", uint64_t{0});
  out.meta.config_hash = meta_j.value("config_hash", std::string());
  if (meta_j.contains("fusion_map")) out.meta.fusion_map_json = meta_j.at("fusion_map").dump();

  out.model = std::make_unique<nn::SequenceModel<float>>(out.config);
  auto& params = out.model->params();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw DataError("checkpoint tensor count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors.at(i);
    if (t.at("name").get<std::string>() != params[i]->name)
      throw DataError("checkpoint tensor order mismatch at " + params[i]->name);
    if (t.at("count").get<size_t>() != params[i]->size())
      throw DataError("checkpoint tensor size mismatch at " + params[i]->name);
  }
  for (auto* p : params) {
    is.read(reinterpret_cast<char*>(p->w.data()), static_cast<std::streamsize>(p->w.size() * sizeof(float)));
    if (static_cast<size_t>(is.gcount()) != p->w.size() * sizeof(float))
      throw DataError("truncated checkpoint blob at " + p->name);
  }
  return out;
}

}  // namespace sqrl
