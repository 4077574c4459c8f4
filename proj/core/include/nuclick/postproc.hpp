#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuclick/raster.hpp"
#include "nuclick/signals.hpp"

namespace nuclick {

/// A cleaned per-object mask in patch space plus the window it came from.
struct ObjectResult {
  PatchSpec patch;
  BinaryMask mask;
  Label object_id = 0;

  friend bool operator==(const ObjectResult&, const ObjectResult&) = default;
};

namespace postproc {

constexpr double kThreshold = 0.5;
constexpr std::size_t kMinArea = 50;

/// 1 where p > threshold (strict).
BinaryMask binarize(const ProbabilityMap& p, double threshold = kThreshold);

/// Drop components smaller than min_area, then keep only components touching the inclusion map.
BinaryMask clean(const BinaryMask& mask, const BinaryMask& inclusion, std::size_t min_area = kMinArea);

/// The result's mask mapped into image space (nearest neighbour when scale != 1).
BinaryMask to_image_space(const ObjectResult& result, Size image_size);

/// Paint every result with its object_id, in order; later results win on overlap.
LabelMap assemble(const std::vector<ObjectResult>& results, Size image_size);

/// Row-major run-length encoding: [start, length, start, length, ...].
std::vector<std::uint32_t> rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const std::vector<std::uint32_t>& rle, Size size);

/// [{"object_id": k, "rle": [...]}, ...] for every label present, in label order.
nlohmann::json label_map_rle(const LabelMap& labels);

}  // namespace postproc
}  // namespace nuclick
