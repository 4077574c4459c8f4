#include "nuclick/morph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

namespace nuclick::morph {

namespace {

constexpr std::array<int, 8> kDx8 = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy8 = {0, -1, -1, -1, 0, 1, 1, 1};

void require_nonempty(const BinaryMask& mask, const char* what) {
  if (mask.width() <= 0 || mask.height() <= 0) throw InvalidInput(std::string(what) + ": zero-sized raster");
}

// Meijster, Roerdink & Hesselink linear-time exact EDT on an integer grid.
// `is_target(x, y)` marks the zero set. Output is squared distance, or -1 if no target exists.
template <class Pred>
Raster<std::int64_t> meijster(int width, int height, Pred is_target) {
  const std::int64_t inf = static_cast<std::int64_t>(width) + height + 1;
  Raster<std::int64_t> g(width, height);
  for (int x = 0; x < width; ++x) {
    g(x, 0) = is_target(x, 0) ? 0 : inf;
    for (int y = 1; y < height; ++y) g(x, y) = is_target(x, y) ? 0 : g(x, y - 1) + 1;
    for (int y = height - 2; y >= 0; --y) {
      if (g(x, y + 1) < g(x, y)) g(x, y) = g(x, y + 1) + 1;
    }
  }

  Raster<std::int64_t> out(width, height);
  std::vector<int> s(static_cast<std::size_t>(width));
  std::vector<std::int64_t> t(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    auto f = [&](std::int64_t x, std::int64_t i) {
      const std::int64_t gi = g(static_cast<int>(i), y);
      return (x - i) * (x - i) + gi * gi;
    };
    auto sep = [&](std::int64_t i, std::int64_t u) {
      const std::int64_t gi = g(static_cast<int>(i), y);
      const std::int64_t gu = g(static_cast<int>(u), y);
      const std::int64_t num = u * u - i * i + gu * gu - gi * gi;
      const std::int64_t den = 2 * (u - i);
      std::int64_t q = num / den;
      if ((num % den != 0) && (num < 0)) --q;  // floor division
      return q;
    };
    int q = 0;
    s[0] = 0;
    t[0] = 0;
    for (int u = 1; u < width; ++u) {
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const std::int64_t w = 1 + sep(s[q], u);
        if (w < width) {
          ++q;
          s[q] = u;
          t[q] = w;
        }
      }
    }
    for (int u = width - 1; u >= 0; --u) {
      const std::int64_t d = f(u, s[q]);
      out(u, y) = d >= inf * inf ? -1 : d;
      if (u == t[q]) --q;
    }
  }
  return out;
}

}  // namespace

Raster<std::int64_t> squared_distance_to(const BinaryMask& targets) {
  require_nonempty(targets, "squared_distance_to");
  return meijster(targets.width(), targets.height(), [&](int x, int y) { return targets(x, y) != 0; });
}

DistanceMap edt(const BinaryMask& mask) {
  require_nonempty(mask, "edt");
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  // One-pixel background frame models "outside the raster is background".
  auto sq = meijster(w, h, [&](int x, int y) {
    if (x == 0 || y == 0 || x == w - 1 || y == h - 1) return true;
    return mask(x - 1, y - 1) == 0;
  });
  DistanceMap out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      out(x, y) = mask(x, y) ? std::sqrt(static_cast<double>(sq(x + 1, y + 1))) : 0.0;
    }
  }
  return out;
}

namespace {

// Neighbours in the order E, NE, N, NW, W, SW, S, SE.
std::array<int, 8> neighbourhood(const BinaryMask& m, int x, int y) {
  std::array<int, 8> n{};
  for (int k = 0; k < 8; ++k) {
    const int nx = x + kDx8[k];
    const int ny = y + kDy8[k];
    n[k] = m.contains(nx, ny) && m(nx, ny) ? 1 : 0;
  }
  return n;
}

int neighbour_count(const std::array<int, 8>& n) {
  int c = 0;
  for (int v : n) c += v;
  return c;
}

}  // namespace

bool is_simple_point(const BinaryMask& mask, int x, int y) {
  const auto n = neighbourhood(mask, x, y);
  // Yokoi connectivity number for 8-connected foreground.
  int yokoi = 0;
  for (int k = 0; k < 8; k += 2) {
    const int a = 1 - n[k];
    const int b = 1 - n[(k + 1) % 8];
    const int c = 1 - n[(k + 2) % 8];
    yokoi += a - a * b * c;
  }
  return yokoi == 1;
}

BinaryMask skeletonize(const BinaryMask& mask) {
  require_nonempty(mask, "skeletonize");
  BinaryMask skel = mask;
  for (auto& v : skel) v = v ? 1 : 0;

  // Directional sub-iterations: remove border pixels facing E, N, W, S in turn. Within one
  // sub-iteration all simple non-end border pixels of that side go at once (judged on the raster
  // as it was before the sub-iteration), so erosion is symmetric and the result ends up centred.
  constexpr std::array<int, 4> kSide = {0, 2, 4, 6};
  std::vector<Point> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int side : kSide) {
      candidates.clear();
      for (int y = 0; y < skel.height(); ++y) {
        for (int x = 0; x < skel.width(); ++x) {
          if (!skel(x, y)) continue;
          const int nx = x + kDx8[side];
          const int ny = y + kDy8[side];
          if (skel.contains(nx, ny) && skel(nx, ny)) continue;
          if (neighbour_count(neighbourhood(skel, x, y)) <= 1) continue;  // endpoint or isolated pixel
          if (!is_simple_point(skel, x, y)) continue;
          candidates.push_back({x, y});
        }
      }
      for (const auto& p : candidates) skel(p.x, p.y) = 0;
      changed = changed || !candidates.empty();
    }
  }

  // Remove staircase corners: a pixel is redundant when two 4-adjacent
  // neighbours at a right angle keep it and the rest connected.
  bool pruned = true;
  while (pruned) {
    pruned = false;
    for (int y = 0; y < skel.height(); ++y) {
      for (int x = 0; x < skel.width(); ++x) {
        if (!skel(x, y)) continue;
        const auto n = neighbourhood(skel, x, y);
        if (neighbour_count(n) < 2) continue;
        const bool corner = (n[0] && n[2]) || (n[2] && n[4]) || (n[4] && n[6]) || (n[6] && n[0]);
        if (corner && is_simple_point(skel, x, y)) {
          skel(x, y) = 0;
          pruned = true;
        }
      }
    }
  }
  return skel;
}

BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask) {
  require_same_size(marker, mask, "reconstruct");
  BinaryMask out(mask.size());
  std::deque<Point> queue;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (marker(x, y) && mask(x, y) && !out(x, y)) {
        out(x, y) = 1;
        queue.push_back({x, y});
      }
    }
  }
  while (!queue.empty()) {
    const Point p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 8; ++k) {
      const int nx = p.x + kDx8[k];
      const int ny = p.y + kDy8[k];
      if (!mask.contains(nx, ny) || !mask(nx, ny) || out(nx, ny)) continue;
      out(nx, ny) = 1;
      queue.push_back({nx, ny});
    }
  }
  return out;
}

LabelMap connected_components(const BinaryMask& mask) {
  LabelMap labels(mask.size());
  Label next = 0;
  std::vector<Point> stack;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y) || labels(x, y)) continue;
      ++next;
      labels(x, y) = next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (int k = 0; k < 8; ++k) {
          const int nx = p.x + kDx8[k];
          const int ny = p.y + kDy8[k];
          if (!mask.contains(nx, ny) || !mask(nx, ny) || labels(nx, ny)) continue;
          labels(nx, ny) = next;
          stack.push_back({nx, ny});
        }
      }
    }
  }
  return labels;
}

std::vector<std::size_t> areas(const LabelMap& labels) {
  std::vector<std::size_t> a(static_cast<std::size_t>(max_label(labels)) + 1, 0);
  for (auto v : labels) ++a[v];
  return a;
}

LabelMap compact(const LabelMap& labels) {
  const auto a = areas(labels);
  std::vector<Label> remap(a.size(), 0);
  Label next = 0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    if (a[k] > 0) remap[k] = ++next;
  }
  LabelMap out(labels.size());
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) out[i] = remap[labels[i]];
  return out;
}

LabelMap remove_small(const LabelMap& labels, std::size_t min_area) {
  const auto a = areas(labels);
  LabelMap kept = labels;
  for (auto& v : kept) {
    if (v != 0 && a[v] < min_area) v = 0;
  }
  return compact(kept);
}

Point deepest_point(const BinaryMask& mask) {
  const auto d = edt(mask);
  Point best{-1, -1};
  double best_d = -1.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) && d(x, y) > best_d) {
        best_d = d(x, y);
        best = {x, y};
      }
    }
  }
  if (best.x < 0) throw InvalidInput("deepest_point: empty mask");
  return best;
}

Point centroid(const LabelMap& labels, Label id) {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      if (id != 0 && labels(x, y) == id) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) throw NotFound("centroid: label " + std::to_string(id) + " not present");
  const Point p{static_cast<int>(std::lround(sx / static_cast<double>(n))),
                static_cast<int>(std::lround(sy / static_cast<double>(n)))};
  if (labels.contains(p) && labels.at(p) == id) return p;
  return deepest_point(mask_of(labels, id));
}

Point sample_interior_point(const BinaryMask& mask, double margin, Rng& rng) {
  require_nonempty(mask, "sample_interior_point");
  if (margin < 0) throw InvalidInput("sample_interior_point: negative margin");
  const auto d = edt(mask);
  std::vector<Point> eligible;
  Point best{-1, -1};
  double best_d = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      if (d(x, y) >= margin) eligible.push_back({x, y});
      if (d(x, y) > best_d) {
        best_d = d(x, y);
        best = {x, y};
      }
    }
  }
  if (best.x < 0) throw InvalidInput("sample_interior_point: mask has no foreground");
  if (eligible.empty()) return best;
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return eligible[pick(rng)];
}

int component_count(const BinaryMask& mask) {
  return static_cast<int>(max_label(connected_components(mask)));
}

int hole_count(const BinaryMask& mask) {
  // Background components under 4-connectivity on a raster framed by background;
  // the component containing the frame is the outside, the rest are holes.
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  Raster<std::uint8_t> seen(w, h);
  auto is_bg = [&](int x, int y) {
    if (x == 0 || y == 0 || x == w - 1 || y == h - 1) return true;
    return mask(x - 1, y - 1) == 0;
  };
  int components = 0;
  std::vector<Point> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!is_bg(x, y) || seen(x, y)) continue;
      ++components;
      seen(x, y) = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (int k = 0; k < 8; k += 2) {
          const int nx = p.x + kDx8[k];
          const int ny = p.y + kDy8[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (!is_bg(nx, ny) || seen(nx, ny)) continue;
          seen(nx, ny) = 1;
          stack.push_back({nx, ny});
        }
      }
    }
  }
  return components - 1;
}

BinaryMask boundary(const BinaryMask& mask) {
  BinaryMask out(mask.size());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int k = 0; k < 8; ++k) {
        const int nx = x + kDx8[k];
        const int ny = y + kDy8[k];
        if (!mask.contains(nx, ny) || !mask(nx, ny)) {
          out(x, y) = 1;
          break;
        }
      }
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& mask) {
  BinaryMask out(mask.size());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      out(x, y) = 1;
      for (int k = 0; k < 8; ++k) {
        const int nx = x + kDx8[k];
        const int ny = y + kDy8[k];
        if (mask.contains(nx, ny)) out(nx, ny) = 1;
      }
    }
  }
  return out;
}

}  // namespace nuclick::morph
