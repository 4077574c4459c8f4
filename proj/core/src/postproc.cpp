#include "nuclick/postproc.hpp"

#include <algorithm>
#include <cmath>

#include "nuclick/morph.hpp"

namespace nuclick::postproc {

BinaryMask binarize(const ProbabilityMap& p, double threshold) {
  BinaryMask m(p.size());
  for (std::size_t i = 0; i < p.pixel_count(); ++i) m[i] = static_cast<double>(p[i]) > threshold ? 1 : 0;
  return m;
}

BinaryMask clean(const BinaryMask& mask, const BinaryMask& inclusion, std::size_t min_area) {
  require_same_size(mask, inclusion, "clean");
  const auto kept = morph::remove_small(morph::connected_components(mask), min_area);
  return morph::reconstruct(inclusion, foreground_of(kept));
}

namespace {

template <class Paint>
void for_each_image_pixel(const ObjectResult& r, Size image_size, Paint paint) {
  if (r.mask.size() != r.patch.size) throw InvalidInput("assemble: mask size differs from its patch");
  const int x0 = std::max(0, r.patch.origin.x);
  const int y0 = std::max(0, r.patch.origin.y);
  const int x1 = std::min(image_size.width, r.patch.origin.x + r.patch.extent_x());
  const int y1 = std::min(image_size.height, r.patch.origin.y + r.patch.extent_y());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const Point p = r.patch.image_to_patch(Point{x, y});
      if (r.patch.contains_patch_pixel(p) && r.mask.at(p)) paint(x, y);
    }
  }
}

}  // namespace

BinaryMask to_image_space(const ObjectResult& result, Size image_size) {
  BinaryMask out(image_size);
  for_each_image_pixel(result, image_size, [&](int x, int y) { out(x, y) = 1; });
  return out;
}

LabelMap assemble(const std::vector<ObjectResult>& results, Size image_size) {
  LabelMap out(image_size);
  for (const auto& r : results) {
    for_each_image_pixel(r, image_size, [&](int x, int y) { out(x, y) = r.object_id; });
  }
  return out;
}

std::vector<std::uint32_t> rle_encode(const BinaryMask& mask) {
  std::vector<std::uint32_t> rle;
  std::size_t i = 0;
  const std::size_t n = mask.pixel_count();
  while (i < n) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n && mask[i]) ++i;
    rle.push_back(static_cast<std::uint32_t>(start));
    rle.push_back(static_cast<std::uint32_t>(i - start));
  }
  return rle;
}

BinaryMask rle_decode(const std::vector<std::uint32_t>& rle, Size size) {
  if (rle.size() % 2) throw InvalidInput("rle_decode: odd run list");
  BinaryMask m(size);
  for (std::size_t k = 0; k < rle.size(); k += 2) {
    const std::size_t start = rle[k];
    const std::size_t len = rle[k + 1];
    if (start + len > m.pixel_count()) throw InvalidInput("rle_decode: run exceeds raster");
    std::fill_n(m.data().begin() + static_cast<std::ptrdiff_t>(start), len, std::uint8_t{1});
  }
  return m;
}

nlohmann::json label_map_rle(const LabelMap& labels) {
  nlohmann::json out = nlohmann::json::array();
  const auto a = morph::areas(labels);
  for (Label k = 1; k < a.size(); ++k) {
    if (a[k] == 0) continue;
    out.push_back({{"object_id", k}, {"rle", rle_encode(mask_of(labels, k))}});
  }
  return out;
}

}  // namespace nuclick::postproc
