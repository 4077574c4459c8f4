#pragma once

#include <optional>
#include <vector>

#include "nuclick/raster.hpp"

namespace nuclick {

/// Inclusion/exclusion pair fed to the network as input channels 4 and 5.
struct GuidingSignal {
  BinaryMask inclusion;
  BinaryMask exclusion;
};

struct Squiggle {
  std::vector<std::vector<PointF>> polylines;

  bool empty() const;
  std::vector<PointF> all_points() const;
};

/// A patch window: `size` patch pixels covering `size * scale` image pixels from `origin`.
/// Origins may be negative (or extend past the image) when the window is mirror-padded.
struct PatchSpec {
  Point origin;
  Size size;
  double scale_x = 1.0;
  double scale_y = 1.0;

  /// Patch pixel holding image point `p` (may be outside the patch).
  Point image_to_patch(PointF p) const;
  Point image_to_patch(Point p) const { return image_to_patch(PointF{double(p.x), double(p.y)}); }
  /// Image pixel that the centre of patch pixel `p` samples from.
  Point patch_to_image(Point p) const;
  bool contains_patch_pixel(Point p) const { return p.x >= 0 && p.y >= 0 && p.x < size.width && p.y < size.height; }
  /// Image-space extent of the window.
  int extent_x() const;
  int extent_y() const;

  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

/// The kind of a user guide; serialized as {"kind": "...", "points": [[x, y], ...]}.
struct GuideInput {
  enum class Kind { Click, Squiggle };
  Kind kind = Kind::Click;
  std::vector<PointF> points;

  /// Click position rounded to a pixel.
  Point click() const;
  Squiggle squiggle() const;
  /// Representative pixel used when this object is excluded from another object's window.
  Point anchor() const;

  friend bool operator==(const GuideInput&, const GuideInput&) = default;
};

namespace signals {

constexpr int kNucleusPatch = 128;
constexpr int kCellPatch = 256;
constexpr int kGlandPatch = 512;
constexpr double kInteriorMargin = 2.0;
constexpr int kTauRedraws = 8;

GuidingSignal click_signal(const std::vector<Point>& clicks, std::size_t target_index, const PatchSpec& window);

/// Random interior point (margin 2) for the target plus snapped centroids of the other instances.
GuidingSignal train_signal_nucleus(const LabelMap& gt, Label target, Rng& rng);

struct GlandSignal {
  GuidingSignal signal;
  double tau = 0.0;
};

/// Skeleton of {edt > tau} for a random tau in [0, mu + sigma] of the target's distance values.
GlandSignal train_signal_gland(const LabelMap& gt, Label target, Rng& rng);
GlandSignal train_signal_gland(const BinaryMask& gt_mask, Rng& rng);

/// Deterministic part of the gland signal: thresholded, split-resolved skeleton at a fixed tau.
BinaryMask gland_inclusion_at(const BinaryMask& gt_mask, double tau);

/// mu + sigma of the distance values over the foreground.
double gland_tau_upper(const BinaryMask& gt_mask);

BinaryMask rasterize_squiggle(const Squiggle& squiggle, const PatchSpec& window);

/// 8-connected integer line from a to b inclusive.
std::vector<Point> line_pixels(Point a, Point b);

PatchSpec patch_for_click(Size image_size, Point click, int size);
PatchSpec patch_for_squiggle(Size image_size, const Squiggle& squiggle, int target = kGlandPatch);

/// Uniform integer offset of norm <= radius, clamped to the image.
Point jitter_click(Point click, double radius, Size image_size, Rng& rng);

/// Offset of (rounded) length `distance` in a uniformly random direction, clamped to the image.
Point displace_click(Point click, double distance, Size image_size, Rng& rng);

/// Image crop for a window: mirror padding outside the image, bilinear when scale != 1.
RgbImage extract_image(const RgbImage& image, const PatchSpec& window);

/// Label crop for a window: zero outside the image, nearest neighbour when scale != 1.
LabelMap extract_labels(const LabelMap& labels, const PatchSpec& window);

/// Max-pool an image-space binary map into the window.
BinaryMask extract_guide(const BinaryMask& image_space, const PatchSpec& window);

/// Guide built from a user input against the other objects' anchors inside the window.
GuidingSignal guide_signal(const GuideInput& input, const std::vector<Point>& other_anchors, const PatchSpec& window);

}  // namespace signals
}  // namespace nuclick
