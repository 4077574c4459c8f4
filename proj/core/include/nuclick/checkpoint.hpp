#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuclick/net.hpp"

namespace nuclick {

/// Base for all checkpoint load failures.
class CheckpointError : public Error {
 public:
  using Error::Error;
};
/// Wrong magic bytes or unsupported format version.
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
/// File ends before the header or a tensor blob is complete.
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
/// Header is unreadable or its tensor manifest disagrees with the configured architecture.
class CheckpointManifestError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

namespace checkpoint {

inline constexpr char kMagic[4] = {'N', 'U', 'C', 'K'};
inline constexpr std::uint8_t kVersion = 1;

/// Layout: "NUCK", version byte, u32 LE header length, UTF-8 JSON header
/// {config, tensors: [{name, shape, offset}]}, then little-endian f32 blobs
/// (offsets relative to the first blob byte).
std::vector<std::uint8_t> serialize(const NetworkParams<float>& params);
NetworkParams<float> deserialize(const std::vector<std::uint8_t>& bytes);

void save(const NetworkParams<float>& params, const std::filesystem::path& path);
NetworkParams<float> load(const std::filesystem::path& path);

/// Reads only the config from a checkpoint header.
NetworkConfig peek_config(const std::filesystem::path& path);

}  // namespace checkpoint
}  // namespace nuclick
