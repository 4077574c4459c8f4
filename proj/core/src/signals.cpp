#include "nuclick/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nuclick/morph.hpp"

namespace nuclick {

namespace {

int floor_div(double v) { return static_cast<int>(std::floor(v + 1e-9)); }

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

Point round_point(PointF p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

// Window placement along one axis for a centre-anchored window of `size` pixels.
int place_axis(int centre, int size, int image_extent) {
  if (image_extent < size) return -((size - image_extent) / 2);
  return std::clamp(centre - size / 2, 0, image_extent - size);
}

}  // namespace

bool Squiggle::empty() const {
  for (const auto& line : polylines) {
    if (!line.empty()) return false;
  }
  return true;
}

std::vector<PointF> Squiggle::all_points() const {
  std::vector<PointF> pts;
  for (const auto& line : polylines) pts.insert(pts.end(), line.begin(), line.end());
  return pts;
}

Point PatchSpec::image_to_patch(PointF p) const {
  const Point q = round_point(p);
  return {floor_div((q.x - origin.x) / scale_x), floor_div((q.y - origin.y) / scale_y)};
}

Point PatchSpec::patch_to_image(Point p) const {
  return {origin.x + floor_div((p.x + 0.5) * scale_x), origin.y + floor_div((p.y + 0.5) * scale_y)};
}

int PatchSpec::extent_x() const { return static_cast<int>(std::lround(size.width * scale_x)); }
int PatchSpec::extent_y() const { return static_cast<int>(std::lround(size.height * scale_y)); }

Point GuideInput::click() const {
  if (points.empty()) throw InvalidInput("guide has no points");
  return round_point(points.front());
}

Squiggle GuideInput::squiggle() const {
  if (points.empty()) throw InvalidInput("guide has no points");
  return Squiggle{{points}};
}

Point GuideInput::anchor() const {
  if (points.empty()) throw InvalidInput("guide has no points");
  if (kind == Kind::Click) return click();
  return round_point(points[points.size() / 2]);
}

namespace signals {

GuidingSignal click_signal(const std::vector<Point>& clicks, std::size_t target_index, const PatchSpec& window) {
  if (target_index >= clicks.size()) throw InvalidInput("click_signal: target index out of range");
  GuidingSignal s{BinaryMask(window.size), BinaryMask(window.size)};
  const Point target = window.image_to_patch(clicks[target_index]);
  if (!window.contains_patch_pixel(target)) throw InvalidInput("click_signal: target click outside window");
  s.inclusion.at(target) = 1;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    if (i == target_index) continue;
    const Point p = window.image_to_patch(clicks[i]);
    if (window.contains_patch_pixel(p) && !s.inclusion.at(p)) s.exclusion.at(p) = 1;
  }
  return s;
}

namespace {

BinaryMask centroid_exclusion(const LabelMap& gt, Label target, const BinaryMask& inclusion) {
  BinaryMask exclusion(gt.size());
  const auto a = morph::areas(gt);
  for (Label k = 1; k < a.size(); ++k) {
    if (k == target || a[k] == 0) continue;
    const Point c = morph::centroid(gt, k);
    if (!inclusion.at(c)) exclusion.at(c) = 1;
  }
  return exclusion;
}

void require_label(const LabelMap& gt, Label target) {
  if (target == 0) throw NotFound("label 0 is background");
  for (auto v : gt) {
    if (v == target) return;
  }
  throw NotFound("label " + std::to_string(target) + " not present");
}

}  // namespace

GuidingSignal train_signal_nucleus(const LabelMap& gt, Label target, Rng& rng) {
  require_label(gt, target);
  GuidingSignal s{BinaryMask(gt.size()), {}};
  const Point p = morph::sample_interior_point(mask_of(gt, target), kInteriorMargin, rng);
  s.inclusion.at(p) = 1;
  s.exclusion = centroid_exclusion(gt, target, s.inclusion);
  return s;
}

double gland_tau_upper(const BinaryMask& gt_mask) {
  const auto d = morph::edt(gt_mask);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt_mask.pixel_count(); ++i) {
    if (!gt_mask[i]) continue;
    sum += d[i];
    sum_sq += d[i] * d[i];
    ++n;
  }
  if (n == 0) throw InvalidInput("gland signal: empty mask");
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
  return mean + std::sqrt(var);
}

BinaryMask gland_inclusion_at(const BinaryMask& gt_mask, double tau) {
  const auto d = morph::edt(gt_mask);
  BinaryMask shrunk(gt_mask.size());
  for (std::size_t i = 0; i < gt_mask.pixel_count(); ++i) shrunk[i] = gt_mask[i] && d[i] > tau;
  if (count_foreground(shrunk) == 0) return shrunk;
  const auto parts = morph::connected_components(shrunk);
  const auto a = morph::areas(parts);
  if (a.size() > 2) {
    Label keep = 1;
    for (Label k = 2; k < a.size(); ++k) {
      if (a[k] > a[keep]) keep = k;
    }
    shrunk = mask_of(parts, keep);
  }
  return morph::skeletonize(shrunk);
}

GlandSignal train_signal_gland(const LabelMap& gt, Label target, Rng& rng) {
  require_label(gt, target);
  const BinaryMask mask = mask_of(gt, target);
  const auto d = morph::edt(mask);
  const double max_d = *std::max_element(d.begin(), d.end());
  const double upper = gland_tau_upper(mask);
  std::uniform_real_distribution<double> draw(0.0, upper);
  double tau = 0.0;
  bool found = false;
  for (int attempt = 0; attempt < kTauRedraws && !found; ++attempt) {
    tau = draw(rng);
    found = tau < max_d;
  }
  if (!found) tau = 0.0;
  GlandSignal out;
  out.tau = tau;
  out.signal.inclusion = gland_inclusion_at(mask, tau);
  out.signal.exclusion = centroid_exclusion(gt, target, out.signal.inclusion);
  return out;
}

GlandSignal train_signal_gland(const BinaryMask& gt_mask, Rng& rng) {
  if (gt_mask.empty() || count_foreground(gt_mask) == 0) throw InvalidInput("gland signal: empty mask");
  LabelMap gt(gt_mask.size());
  for (std::size_t i = 0; i < gt_mask.pixel_count(); ++i) gt[i] = gt_mask[i] ? 1 : 0;
  return train_signal_gland(gt, 1, rng);
}

std::vector<Point> line_pixels(Point a, Point b) {
  std::vector<Point> pts;
  int dx = std::abs(b.x - a.x);
  int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Point p = a;
  while (true) {
    pts.push_back(p);
    if (p == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      p.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      p.y += sy;
    }
  }
  return pts;
}

BinaryMask extract_guide(const BinaryMask& image_space, const PatchSpec& window) {
  BinaryMask out(window.size);
  for (int py = 0; py < window.size.height; ++py) {
    const int y0 = window.origin.y + floor_div(py * window.scale_y);
    const int y1 = std::max(y0 + 1, window.origin.y + floor_div((py + 1) * window.scale_y));
    for (int px = 0; px < window.size.width; ++px) {
      const int x0 = window.origin.x + floor_div(px * window.scale_x);
      const int x1 = std::max(x0 + 1, window.origin.x + floor_div((px + 1) * window.scale_x));
      std::uint8_t v = 0;
      for (int y = y0; y < y1 && !v; ++y) {
        for (int x = x0; x < x1 && !v; ++x) {
          if (image_space.contains(x, y) && image_space(x, y)) v = 1;
        }
      }
      out(px, py) = v;
    }
  }
  return out;
}

BinaryMask rasterize_squiggle(const Squiggle& squiggle, const PatchSpec& window) {
  if (squiggle.empty()) throw InvalidInput("rasterize_squiggle: empty squiggle");
  // Lines are drawn in image space over the window's extent, then max-pooled into the patch.
  const int ex = window.extent_x();
  const int ey = window.extent_y();
  BinaryMask canvas(ex, ey);
  bool any_inside = false;
  for (const auto& line : squiggle.polylines) {
    if (line.empty()) continue;
    std::vector<Point> local;
    for (const auto& p : line) {
      const Point q = round_point(p);
      const Point l{q.x - window.origin.x, q.y - window.origin.y};
      any_inside = any_inside || canvas.contains(l);
      local.push_back(l);
    }
    if (local.size() == 1) {
      if (canvas.contains(local[0])) canvas.at(local[0]) = 1;
      continue;
    }
    for (std::size_t i = 1; i < local.size(); ++i) {
      for (const auto& p : line_pixels(local[i - 1], local[i])) {
        if (canvas.contains(p)) canvas.at(p) = 1;
      }
    }
  }
  if (!any_inside) throw InvalidInput("rasterize_squiggle: all points outside window");
  if (window.scale_x == 1.0 && window.scale_y == 1.0) return canvas;
  PatchSpec local_window = window;
  local_window.origin = {0, 0};
  return extract_guide(canvas, local_window);
}

PatchSpec patch_for_click(Size image_size, Point click, int size) {
  if (size <= 0) throw InvalidInput("patch_for_click: non-positive size");
  PatchSpec w;
  w.size = {size, size};
  w.origin = {place_axis(click.x, size, image_size.width), place_axis(click.y, size, image_size.height)};
  return w;
}

PatchSpec patch_for_squiggle(Size image_size, const Squiggle& squiggle, int target) {
  if (squiggle.empty()) throw InvalidInput("patch_for_squiggle: empty squiggle");
  int min_x = image_size.width - 1;
  int min_y = image_size.height - 1;
  int max_x = 0;
  int max_y = 0;
  for (const auto& p : squiggle.all_points()) {
    const Point q = round_point(p);
    min_x = std::min(min_x, std::clamp(q.x, 0, image_size.width - 1));
    min_y = std::min(min_y, std::clamp(q.y, 0, image_size.height - 1));
    max_x = std::max(max_x, std::clamp(q.x, 0, image_size.width - 1));
    max_y = std::max(max_y, std::clamp(q.y, 0, image_size.height - 1));
  }
  PatchSpec w;
  w.size = {target, target};
  auto axis = [&](int lo, int hi, int image_extent, int& origin, double& scale) {
    const int extent = hi - lo + 1;
    if (extent < target) {
      const int centre = lo + extent / 2;
      origin = place_axis(centre, target, image_extent);
      scale = 1.0;
    } else {
      origin = lo;
      scale = static_cast<double>(extent) / target;
    }
  };
  axis(min_x, max_x, image_size.width, w.origin.x, w.scale_x);
  axis(min_y, max_y, image_size.height, w.origin.y, w.scale_y);
  return w;
}

Point jitter_click(Point click, double radius, Size image_size, Rng& rng) {
  if (radius <= 0) return click;
  const int r = static_cast<int>(std::floor(radius));
  std::vector<Point> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offsets.push_back({dx, dy});
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, offsets.size() - 1);
  const Point o = offsets[pick(rng)];
  return {std::clamp(click.x + o.x, 0, image_size.width - 1), std::clamp(click.y + o.y, 0, image_size.height - 1)};
}

Point displace_click(Point click, double distance, Size image_size, Rng& rng) {
  if (distance <= 0) return click;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double a = angle(rng);
  const int dx = static_cast<int>(std::lround(distance * std::cos(a)));
  const int dy = static_cast<int>(std::lround(distance * std::sin(a)));
  return {std::clamp(click.x + dx, 0, image_size.width - 1), std::clamp(click.y + dy, 0, image_size.height - 1)};
}

RgbImage extract_image(const RgbImage& image, const PatchSpec& window) {
  if (image.empty()) throw InvalidInput("extract_image: empty image");
  RgbImage out(window.size);
  const bool unit = window.scale_x == 1.0 && window.scale_y == 1.0;
  for (int py = 0; py < window.size.height; ++py) {
    for (int px = 0; px < window.size.width; ++px) {
      if (unit) {
        out(px, py) = image(reflect(window.origin.x + px, image.width()), reflect(window.origin.y + py, image.height()));
        continue;
      }
      const double sx = window.origin.x + (px + 0.5) * window.scale_x - 0.5;
      const double sy = window.origin.y + (py + 0.5) * window.scale_y - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      const Rgb& a = image(reflect(x0, image.width()), reflect(y0, image.height()));
      const Rgb& b = image(reflect(x0 + 1, image.width()), reflect(y0, image.height()));
      const Rgb& c = image(reflect(x0, image.width()), reflect(y0 + 1, image.height()));
      const Rgb& d = image(reflect(x0 + 1, image.width()), reflect(y0 + 1, image.height()));
      auto mix = [&](std::uint8_t va, std::uint8_t vb, std::uint8_t vc, std::uint8_t vd) {
        const double top = va * (1 - fx) + vb * fx;
        const double bottom = vc * (1 - fx) + vd * fx;
        return static_cast<std::uint8_t>(std::clamp(std::lround(top * (1 - fy) + bottom * fy), 0L, 255L));
      };
      out(px, py) = {mix(a.r, b.r, c.r, d.r), mix(a.g, b.g, c.g, d.g), mix(a.b, b.b, c.b, d.b)};
    }
  }
  return out;
}

LabelMap extract_labels(const LabelMap& labels, const PatchSpec& window) {
  LabelMap out(window.size);
  for (int py = 0; py < window.size.height; ++py) {
    for (int px = 0; px < window.size.width; ++px) {
      const Point q = window.patch_to_image({px, py});
      out(px, py) = labels.contains(q) ? labels.at(q) : 0;
    }
  }
  return out;
}

GuidingSignal guide_signal(const GuideInput& input, const std::vector<Point>& other_anchors, const PatchSpec& window) {
  GuidingSignal s{BinaryMask(window.size), BinaryMask(window.size)};
  if (input.kind == GuideInput::Kind::Click) {
    const Point p = window.image_to_patch(input.click());
    if (!window.contains_patch_pixel(p)) throw InvalidInput("guide click outside window");
    s.inclusion.at(p) = 1;
  } else {
    s.inclusion = rasterize_squiggle(input.squiggle(), window);
  }
  for (const auto& a : other_anchors) {
    const Point p = window.image_to_patch(a);
    if (window.contains_patch_pixel(p) && !s.inclusion.at(p)) s.exclusion.at(p) = 1;
  }
  return s;
}

}  // namespace signals
}  // namespace nuclick
