#pragma once

#include <vector>

#include "nuclick/net.hpp"
#include "nuclick/postproc.hpp"
#include "nuclick/signals.hpp"

/// Guide -> window -> network -> cleaned mask, shared by the CLI, the service and evaluation.
namespace nuclick::pipeline {

/// Clicks get a patch_size window centred on the click; squiggles follow the bounding-box rules
/// with patch_size as the target side.
PatchSpec window_for(const GuideInput& input, Size image_size, const NetworkConfig& config);

/// Throws InvalidInput when the guide is empty or any point lies outside the image.
void validate_guide(const GuideInput& input, Size image_size);

struct Request {
  GuideInput input;
  /// Anchors of the other objects; those inside the window become exclusion pixels.
  std::vector<Point> others;
  Label object_id = 0;
};

/// One forward pass for all requests (batched), then threshold + clean per object.
std::vector<ObjectResult> segment(const NetworkParams<float>& params, const RgbImage& image,
                                  const std::vector<Request>& requests);

ObjectResult segment_one(const NetworkParams<float>& params, const RgbImage& image, const Request& request);

/// Headless batch mode: guides are processed in order, each excluding the anchors of the
/// ones before it, and assembled with ids 1..n (later wins). Mirrors a session that
/// receives the same guides one by one.
LabelMap segment_sequence(const NetworkParams<float>& params, const RgbImage& image, const std::vector<GuideInput>& guides);

GuideInput guide_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GuideInput& g);

}  // namespace nuclick::pipeline
