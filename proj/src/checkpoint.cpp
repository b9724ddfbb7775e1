#include "ssdpt/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace ssdpt {

namespace {

using nlohmann::json;

json config_to_json(const DptConfig& c) {
  return json{{"blocks", c.blocks},
              {"frame_length", c.frame_length},
              {"bands", c.bands},
              {"heads", c.heads},
              {"encoder_layers", c.encoder_layers},
              {"ffn_width", c.ffn_width},
              {"num_ids", c.num_ids}};
}

DptConfig config_from_json(const json& j) {
  DptConfig c;
  c.blocks = j.at("blocks").get<int>();
  c.frame_length = j.at("frame_length").get<int>();
  c.bands = j.at("bands").get<int>();
  c.heads = j.at("heads").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.ffn_width = j.at("ffn_width").get<int>();
  c.num_ids = j.at("num_ids").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const DptModel& model) {
  json manifest = json::array();
  size_t offset = 0;
  const auto params = model.parameters();
  for (const auto& np : params) {
    manifest.push_back(json{{"name", np.name},
                            {"rows", np.value->rows()},
                            {"cols", np.value->cols()},
                            {"offset", offset}});
    offset += np.value->size();
  }
  const json header = {{"version", "ssdpt-ckpt-1"},
                       {"config", config_to_json(model.config)},
                       {"param_count", offset},
                       {"params", manifest}};
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) {
    throw std::runtime_error("save_checkpoint: cannot open " + path);
  }
  const uint32_t len = static_cast<uint32_t>(header_str.size());
  const uint8_t lenb[4] = {static_cast<uint8_t>(len), static_cast<uint8_t>(len >> 8),
                           static_cast<uint8_t>(len >> 16),
                           static_cast<uint8_t>(len >> 24)};
  out.write(reinterpret_cast<const char*>(lenb), 4);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& np : params) {
    out.write(reinterpret_cast<const char*>(np.value->data()),
              static_cast<std::streamsize>(np.value->size() * sizeof(double)));
  }
  if (!out.good()) {
    throw std::runtime_error("save_checkpoint: write failed: " + path);
  }
}

DptModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) {
    throw std::runtime_error("load_checkpoint: cannot open " + path);
  }
  uint8_t lenb[4];
  in.read(reinterpret_cast<char*>(lenb), 4);
  if (!in.good()) {
    throw std::runtime_error("load_checkpoint: truncated header: " + path);
  }
  const uint32_t len = static_cast<uint32_t>(lenb[0]) | (lenb[1] << 8) |
                       (lenb[2] << 16) | (static_cast<uint32_t>(lenb[3]) << 24);
  std::string header_str(len, '\0');
  in.read(header_str.data(), len);
  if (!in.good()) {
    throw std::runtime_error("load_checkpoint: truncated header: " + path);
  }
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw std::runtime_error("load_checkpoint: bad header JSON: " +
                             std::string(e.what()));
  }
  if (header.at("version").get<std::string>() != "ssdpt-ckpt-1") {
    throw std::runtime_error("load_checkpoint: unsupported version in " + path);
  }

  DptModel model = DptModel::zeros(config_from_json(header.at("config")));
  auto params = model.parameters();
  const json& manifest = header.at("params");
  if (manifest.size() != params.size()) {
    throw std::runtime_error("load_checkpoint: manifest size mismatch in " + path);
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const json& entry = manifest[i];
    if (entry.at("name").get<std::string>() != params[i].name ||
        entry.at("rows").get<int>() != params[i].value->rows() ||
        entry.at("cols").get<int>() != params[i].value->cols()) {
      throw std::runtime_error("load_checkpoint: manifest entry " +
                               entry.at("name").get<std::string>() +
                               " does not match model layout");
    }
    in.read(reinterpret_cast<char*>(params[i].value->data()),
            static_cast<std::streamsize>(params[i].value->size() * sizeof(double)));
    if (!in.good()) {
      throw std::runtime_error("load_checkpoint: truncated parameter data: " + path);
    }
  }
  return model;
}

}  // namespace ssdpt
