#include "nuclick/pipeline.hpp"

#include <cmath>

namespace nuclick::pipeline {

namespace {

constexpr int kBatchLimit = 32;

}  // namespace

void validate_guide(const GuideInput& input, Size image_size) {
  if (input.points.empty()) throw InvalidInput("guide has no points");
  if (input.kind == GuideInput::Kind::Click && input.points.size() != 1) throw InvalidInput("a click guide has exactly one point");
  for (const auto& p : input.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("guide point is not finite");
    const long x = std::lround(p.x);
    const long y = std::lround(p.y);
    if (x < 0 || y < 0 || x >= image_size.width || y >= image_size.height) throw InvalidInput("guide point outside the image");
  }
}

PatchSpec window_for(const GuideInput& input, Size image_size, const NetworkConfig& config) {
  if (input.kind == GuideInput::Kind::Click) return signals::patch_for_click(image_size, input.click(), config.patch_size);
  return signals::patch_for_squiggle(image_size, input.squiggle(), config.patch_size);
}

std::vector<ObjectResult> segment(const NetworkParams<float>& params, const RgbImage& image,
                                  const std::vector<Request>& requests) {
  std::vector<ObjectResult> out;
  out.reserve(requests.size());
  const auto& config = params.config;
  const int side = config.patch_size;
  for (std::size_t first = 0; first < requests.size(); first += kBatchLimit) {
    const std::size_t last = std::min(requests.size(), first + kBatchLimit);
    const int n = static_cast<int>(last - first);
    nn::Tensor<float> batch({n, config.input_channels, side, side});
    std::vector<GuidingSignal> guides;
    std::vector<PatchSpec> windows;
    for (std::size_t k = first; k < last; ++k) {
      const auto& r = requests[k];
      validate_guide(r.input, image.size());
      const PatchSpec w = window_for(r.input, image.size(), config);
      GuidingSignal g = signals::guide_signal(r.input, r.others, w);
      net::write_input(signals::extract_image(image, w), g, config.use_exclusion, batch, static_cast<int>(k - first));
      guides.push_back(std::move(g));
      windows.push_back(w);
    }
    const auto probs = net::predict(params, batch);
    for (int k = 0; k < n; ++k) {
      const auto mask = postproc::clean(postproc::binarize(net::prediction_map(probs, k)), guides[k].inclusion);
      out.push_back({windows[k], mask, requests[first + k].object_id});
    }
  }
  return out;
}

ObjectResult segment_one(const NetworkParams<float>& params, const RgbImage& image, const Request& request) {
  return segment(params, image, {request}).front();
}

LabelMap segment_sequence(const NetworkParams<float>& params, const RgbImage& image, const std::vector<GuideInput>& guides) {
  std::vector<ObjectResult> results;
  std::vector<Point> anchors;
  for (std::size_t i = 0; i < guides.size(); ++i) {
    results.push_back(segment_one(params, image, {guides[i], anchors, static_cast<Label>(i + 1)}));
    anchors.push_back(guides[i].anchor());
  }
  return postproc::assemble(results, image.size());
}

GuideInput guide_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("guide must be a JSON object");
  GuideInput g;
  const std::string kind = j.value("kind", "");
  if (kind == "click") {
    g.kind = GuideInput::Kind::Click;
  } else if (kind == "squiggle") {
    g.kind = GuideInput::Kind::Squiggle;
  } else {
    throw InvalidInput("guide kind must be \"click\" or \"squiggle\"");
  }
  if (!j.contains("points") || !j["points"].is_array()) throw InvalidInput("guide needs a points array");
  for (const auto& p : j["points"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) throw InvalidInput("guide point must be [x, y]");
    g.points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (g.points.empty()) throw InvalidInput("guide has no points");
  return g;
}

nlohmann::json to_json(const GuideInput& g) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : g.points) pts.push_back({p.x, p.y});
  return {{"kind", g.kind == GuideInput::Kind::Click ? "click" : "squiggle"}, {"points", pts}};
}

}  // namespace nuclick::pipeline
