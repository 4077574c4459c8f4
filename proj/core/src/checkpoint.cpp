#include "nuclick/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace nuclick {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

nlohmann::json to_json(const NetworkConfig& c) {
  return {{"input_channels", c.input_channels}, {"base_width", c.base_width},
          {"depth", c.depth},                   {"ms_block_levels", c.ms_block_levels},
          {"ms_dilations", c.ms_dilations},     {"patch_size", c.patch_size},
          {"kind", to_string(c.kind)},          {"dice_factor_two", c.dice_factor_two},
          {"use_exclusion", c.use_exclusion}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.input_channels = j.at("input_channels").get<int>();
  c.base_width = j.at("base_width").get<int>();
  c.depth = j.at("depth").get<int>();
  c.ms_block_levels = j.at("ms_block_levels").get<std::vector<int>>();
  c.ms_dilations = j.at("ms_dilations").get<std::vector<int>>();
  c.patch_size = j.at("patch_size").get<int>();
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  c.dice_factor_two = j.value("dice_factor_two", false);
  c.use_exclusion = j.value("use_exclusion", true);
  return c;
}

namespace checkpoint {

namespace {

struct Entry {
  std::string name;
  const nn::Tensor<float>* tensor;
};

std::vector<Entry> entries(const NetworkParams<float>& params) {
  std::vector<Entry> out;
  for (std::size_t i = 0; i < params.params().size(); ++i) out.push_back({params.param_names()[i], &params.params()[i]->value});
  for (std::size_t i = 0; i < params.bn_states().size(); ++i) {
    out.push_back({params.bn_names()[i] + ".running_mean", &params.bn_states()[i].mean});
    out.push_back({params.bn_names()[i] + ".running_var", &params.bn_states()[i].var});
  }
  return out;
}

std::vector<nn::Tensor<float>*> mutable_tensors(NetworkParams<float>& params) {
  std::vector<nn::Tensor<float>*> out;
  for (const auto& p : params.params()) out.push_back(&p->value);
  for (auto& bn : params.bn_states()) {
    out.push_back(&bn.mean);
    out.push_back(&bn.var);
  }
  return out;
}

struct Header {
  nlohmann::json json;
  std::size_t blob_start = 0;
};

Header read_header(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw CheckpointTruncatedError("checkpoint shorter than its magic bytes");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointVersionError("not a checkpoint: bad magic bytes");
  if (bytes.size() < 9) throw CheckpointTruncatedError("checkpoint truncated inside the preamble");
  if (bytes[4] != kVersion) throw CheckpointVersionError("unsupported checkpoint version " + std::to_string(bytes[4]));
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 5, 4);
  if (bytes.size() < 9 + static_cast<std::size_t>(len)) throw CheckpointTruncatedError("checkpoint truncated inside the header");
  Header h;
  try {
    h.json = nlohmann::json::parse(bytes.begin() + 9, bytes.begin() + 9 + len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointManifestError(std::string("unreadable checkpoint header: ") + e.what());
  }
  h.blob_start = 9 + len;
  return h;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::uint8_t> serialize(const NetworkParams<float>& params) {
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& e : entries(params)) {
    manifest.push_back({{"name", e.name}, {"shape", e.tensor->shape()}, {"offset", offset}});
    offset += e.tensor->numel() * sizeof(float);
  }
  const nlohmann::json header = {{"config", to_json(params.config)}, {"tensors", manifest}, {"dtype", "f32le"}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  const auto len = static_cast<std::uint32_t>(text.size());
  const auto* lp = reinterpret_cast<const std::uint8_t*>(&len);
  out.insert(out.end(), lp, lp + 4);
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& e : entries(params)) {
    const auto* bp = reinterpret_cast<const std::uint8_t*>(e.tensor->data());
    out.insert(out.end(), bp, bp + e.tensor->numel() * sizeof(float));
  }
  return out;
}

NetworkParams<float> deserialize(const std::vector<std::uint8_t>& bytes) {
  const Header h = read_header(bytes);
  NetworkConfig config;
  try {
    config = network_config_from_json(h.json.at("config"));
    config.validate();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointManifestError(std::string("bad checkpoint config: ") + e.what());
  } catch (const InvalidConfig& e) {
    throw CheckpointManifestError(std::string("bad checkpoint config: ") + e.what());
  }
  Rng rng(0);
  NetworkParams<float> params = net::build<float>(config, rng);
  const auto expected = entries(params);
  const auto targets = mutable_tensors(params);
  const auto& manifest = h.json.contains("tensors") ? h.json.at("tensors") : nlohmann::json::array();
  if (!manifest.is_array() || manifest.size() != expected.size()) {
    throw CheckpointManifestError("tensor manifest does not match the configured architecture");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& m = manifest[i];
    std::vector<int> shape;
    std::size_t offset = 0;
    try {
      if (m.at("name").get<std::string>() != expected[i].name) throw CheckpointManifestError("tensor name mismatch: " + expected[i].name);
      shape = m.at("shape").get<std::vector<int>>();
      offset = m.at("offset").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointManifestError(std::string("bad manifest entry: ") + e.what());
    }
    if (shape != expected[i].tensor->shape()) throw CheckpointManifestError("shape mismatch for " + expected[i].name);
    const std::size_t nbytes = expected[i].tensor->numel() * sizeof(float);
    if (h.blob_start + offset + nbytes > bytes.size()) throw CheckpointTruncatedError("checkpoint truncated in " + expected[i].name);
    std::memcpy(targets[i]->data(), bytes.data() + h.blob_start + offset, nbytes);
  }
  return params;
}

void save(const NetworkParams<float>& params, const std::filesystem::path& path) {
  const auto bytes = serialize(params);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

NetworkParams<float> load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

NetworkConfig peek_config(const std::filesystem::path& path) {
  const Header h = read_header(read_file(path));
  try {
    return network_config_from_json(h.json.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointManifestError(std::string("bad checkpoint config: ") + e.what());
  }
}

}  // namespace checkpoint
}  // namespace nuclick
