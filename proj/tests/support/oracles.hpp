#pragma once

// Independent brute-force reference implementations used by the unit and
// acceptance tests. Everything here is deliberately slow and direct.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "nuclick/nn/autograd.hpp"
#include "nuclick/raster.hpp"

namespace oracle {

using nuclick::BinaryMask;
using nuclick::DistanceMap;
using nuclick::Label;
using nuclick::LabelMap;
using nuclick::Rng;

inline bool fg(const BinaryMask& m, int x, int y) { return m.contains(x, y) && m(x, y) != 0; }

/// Nearest background pixel by exhaustive scan; the outside of the raster is background.
inline DistanceMap edt(const BinaryMask& m) {
  DistanceMap d(m.size(), 0.0);
  const int w = m.width();
  const int h = m.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      // Closest outside pixel: straight out through the nearest edge.
      std::int64_t best = std::min({x + 1, w - x, y + 1, h - y});
      best *= best;
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          if (m(u, v)) continue;
          const std::int64_t dx = u - x;
          const std::int64_t dy = v - y;
          best = std::min(best, dx * dx + dy * dy);
        }
      }
      d(x, y) = std::sqrt(static_cast<double>(best));
    }
  }
  return d;
}

/// 8-neighbour geodesic dilation of marker inside mask, iterated to a fixpoint.
inline BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask) {
  BinaryMask cur(mask.size());
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) cur[i] = marker[i] && mask[i];
  bool changed = true;
  while (changed) {
    changed = false;
    BinaryMask next = cur;
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (cur(x, y) || !mask(x, y)) continue;
        for (int dy = -1; dy <= 1 && !next(x, y); ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (fg(cur, x + dx, y + dy)) {
              next(x, y) = 1;
              changed = true;
              break;
            }
          }
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Flood-fill labeling with a stack; `eight` selects 8- or 4-connectivity.
/// `value` picks which pixels are members (foreground or background).
inline LabelMap flood_label(const BinaryMask& m, bool eight, std::uint8_t value) {
  LabelMap out(m.size(), 0);
  Label next = 1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if ((m(x, y) != 0) != (value != 0) || out(x, y)) continue;
      std::vector<std::pair<int, int>> stack{{x, y}};
      out(x, y) = next;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!m.contains(nx, ny) || out(nx, ny) || (m(nx, ny) != 0) != (value != 0)) continue;
            out(nx, ny) = next;
            stack.push_back({nx, ny});
          }
        }
      }
      ++next;
    }
  }
  return out;
}

inline int components(const BinaryMask& m) { return static_cast<int>(nuclick::max_label(flood_label(m, true, 1))); }

/// 4-connected background components that do not reach the raster edge.
inline int holes(const BinaryMask& m) {
  const auto bg = flood_label(m, false, 0);
  std::set<Label> touching;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (bg(x, y) && (x == 0 || y == 0 || x == m.width() - 1 || y == m.height() - 1)) touching.insert(bg(x, y));
    }
  }
  return static_cast<int>(nuclick::max_label(bg)) - static_cast<int>(touching.size());
}

/// Whether two label maps induce the same partition of the foreground.
inline bool same_partition(const LabelMap& a, const LabelMap& b) {
  if (a.size() != b.size()) return false;
  std::map<Label, Label> ab;
  std::map<Label, Label> ba;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    auto [it, fresh] = ab.emplace(a[i], b[i]);
    if (!fresh && it->second != b[i]) return false;
    auto [jt, fresh2] = ba.emplace(b[i], a[i]);
    if (!fresh2 && jt->second != a[i]) return false;
  }
  return true;
}

inline BinaryMask boundary(const BinaryMask& m) {
  BinaryMask out(m.size());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && !fg(m, x + dx, y + dy)) out(x, y) = 1;
        }
      }
    }
  }
  return out;
}

/// Max over both directions of the min distance between boundary pixels.
inline double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  std::vector<std::pair<int, int>> pa;
  std::vector<std::pair<int, int>> pb;
  const auto ba = boundary(a);
  const auto bb = boundary(b);
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (ba(x, y)) pa.push_back({x, y});
      if (bb(x, y)) pb.push_back({x, y});
    }
  }
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (auto [x, y] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (auto [u, v] : to) best = std::min(best, std::hypot(double(x - u), double(y - v)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

struct Instance {
  Label id;
  std::vector<std::size_t> pixels;
};

inline std::vector<Instance> instances(const LabelMap& m) {
  std::map<Label, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    if (m[i]) by[m[i]].push_back(i);
  }
  std::vector<Instance> out;
  for (auto& [id, px] : by) out.push_back({id, std::move(px)});
  return out;
}

inline double count_inter(const Instance& a, const Instance& b) {
  std::vector<std::size_t> common;
  std::set_intersection(a.pixels.begin(), a.pixels.end(), b.pixels.begin(), b.pixels.end(), std::back_inserter(common));
  return static_cast<double>(common.size());
}

inline double iou(const Instance& a, const Instance& b) {
  const double i = count_inter(a, b);
  return i / (static_cast<double>(a.pixels.size() + b.pixels.size()) - i);
}

/// GT in label order, each taking its best-IoU unused overlapping prediction (lowest label on ties).
inline double aji(const LabelMap& gt, const LabelMap& pred) {
  const auto g = instances(gt);
  const auto p = instances(pred);
  std::vector<bool> used(p.size(), false);
  double c = 0.0;
  double u = 0.0;
  for (const auto& gi : g) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (used[j]) continue;
      const double v = iou(gi, p[j]);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) {
      u += static_cast<double>(gi.pixels.size());
      continue;
    }
    used[best] = true;
    const double i = count_inter(gi, p[best]);
    c += i;
    u += static_cast<double>(gi.pixels.size() + p[best].pixels.size()) - i;
  }
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!used[j]) u += static_cast<double>(p[j].pixels.size());
  }
  return u == 0.0 ? 1.0 : c / u;
}

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> ious;
  std::size_t gt_count = 0;
  std::size_t pred_count = 0;
};

/// Exhaustive pair scan; every pair above 0.5 IoU is a match.
inline Matching match(const LabelMap& gt, const LabelMap& pred, std::vector<Instance>* g_out = nullptr,
                      std::vector<Instance>* p_out = nullptr) {
  const auto g = instances(gt);
  const auto p = instances(pred);
  Matching m;
  m.gt_count = g.size();
  m.pred_count = p.size();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double v = iou(g[i], p[j]);
      if (v > 0.5) {
        m.pairs.push_back({i, j});
        m.ious.push_back(v);
      }
    }
  }
  if (g_out) *g_out = g;
  if (p_out) *p_out = p;
  return m;
}

struct Panoptic {
  double dq;
  double sq;
  double pq;
};

inline Panoptic panoptic(const LabelMap& gt, const LabelMap& pred) {
  const auto m = match(gt, pred);
  const double tp = static_cast<double>(m.pairs.size());
  const double fn = static_cast<double>(m.gt_count) - tp;
  const double fp = static_cast<double>(m.pred_count) - tp;
  if (tp + fn + fp == 0) return {1.0, 1.0, 1.0};
  const double dq = tp / (tp + 0.5 * fp + 0.5 * fn);
  double sq = 0.0;
  for (double v : m.ious) sq += v;
  sq = tp > 0 ? sq / tp : 0.0;
  return {dq, sq, dq * sq};
}

struct ObjectLevel {
  double f1;
  double dice;
  double hausdorff;
};

inline BinaryMask to_mask(const Instance& inst, nuclick::Size size) {
  BinaryMask m(size);
  for (auto i : inst.pixels) m[i] = 1;
  return m;
}

inline ObjectLevel object_level(const LabelMap& gt, const LabelMap& pred) {
  std::vector<Instance> g;
  std::vector<Instance> p;
  const auto m = match(gt, pred, &g, &p);
  const double tp = static_cast<double>(m.pairs.size());
  const double total = static_cast<double>(m.gt_count + m.pred_count);
  if (total == 0) return {1.0, 1.0, 0.0};
  ObjectLevel r{2.0 * tp / total, 0.0, 0.0};
  double weight = 0.0;
  for (auto [i, j] : m.pairs) {
    const double w = static_cast<double>(g[i].pixels.size());
    const double d = 2.0 * count_inter(g[i], p[j]) / static_cast<double>(g[i].pixels.size() + p[j].pixels.size());
    weight += w;
    r.dice += w * d;
    r.hausdorff += w * hausdorff(to_mask(g[i], gt.size()), to_mask(p[j], gt.size()));
  }
  if (weight > 0) {
    r.dice /= weight;
    r.hausdorff /= weight;
  }
  return r;
}

/// Central finite differences of a scalar function of several double tensors,
/// compared norm-wise against the tape gradient. Returns the worst relative error.
using nuclick::nn::Tensor;
using nuclick::nn::Var;
using ScalarFn = std::function<Var<double>(nuclick::nn::Context<double>&, const std::vector<Var<double>>&)>;

inline double gradient_error(const ScalarFn& f, const std::vector<Tensor<double>>& inputs, double h = 1e-6) {
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(nuclick::nn::variable(t));
  nuclick::nn::Tape<double> tape;
  nuclick::nn::Context<double> ctx{&tape, true};
  auto out = f(ctx, vars);
  tape.backward(out);

  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    std::vector<Var<double>> cs;
    for (const auto& t : xs) cs.push_back(nuclick::nn::constant(t));
    nuclick::nn::Context<double> plain{nullptr, true};
    return f(plain, cs)->value[0];
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    double diff2 = 0.0;
    double a2 = 0.0;
    double n2 = 0.0;
    auto xs = inputs;
    for (std::size_t i = 0; i < xs[k].numel(); ++i) {
      const double x0 = xs[k][i];
      xs[k][i] = x0 + h;
      const double up = eval(xs);
      xs[k][i] = x0 - h;
      const double dn = eval(xs);
      xs[k][i] = x0;
      const double num = (up - dn) / (2.0 * h);
      const double ana = vars[k]->has_grad() ? vars[k]->grad[i] : 0.0;
      diff2 += (num - ana) * (num - ana);
      a2 += ana * ana;
      n2 += num * num;
    }
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    if (denom > 0) worst = std::max(worst, std::sqrt(diff2) / denom);
  }
  return worst;
}

inline Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.storage()) v = u(rng);
  return t;
}

/// Random blob-union mask: a few filled discs and rings.
inline BinaryMask random_blobs(int w, int h, Rng& rng, bool rings = true) {
  BinaryMask m(w, h);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> cx(0, w);
  std::uniform_real_distribution<double> cy(0, h);
  std::uniform_real_distribution<double> rad(2.0, std::min(w, h) / 3.0);
  std::bernoulli_distribution ring(rings ? 0.4 : 0.0);
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    const double x0 = cx(rng);
    const double y0 = cy(rng);
    const double r = rad(rng);
    const double inner = ring(rng) ? r * 0.5 : -1.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d = std::hypot(x - x0, y - y0);
        if (d <= r && d > inner) m(x, y) = 1;
      }
    }
  }
  return m;
}

/// Uniform random bits with density `p`.
inline BinaryMask random_bits(int w, int h, double p, Rng& rng) {
  BinaryMask m(w, h);
  std::bernoulli_distribution b(p);
  for (auto& v : m) v = b(rng);
  return m;
}

/// A random label map with a handful of rectangles (later ones overwrite).
inline LabelMap random_labels(int w, int h, Rng& rng, int max_objects = 5) {
  LabelMap m(w, h, 0);
  std::uniform_int_distribution<int> count(0, max_objects);
  std::uniform_int_distribution<int> px(0, w - 1);
  std::uniform_int_distribution<int> py(0, h - 1);
  std::uniform_int_distribution<int> ext(1, std::max(2, w / 3));
  const int n = count(rng);
  for (int k = 1; k <= n; ++k) {
    const int x0 = px(rng);
    const int y0 = py(rng);
    const int x1 = std::min(w, x0 + ext(rng));
    const int y1 = std::min(h, y0 + ext(rng));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) m(x, y) = static_cast<Label>(k);
    }
  }
  return m;
}

/// Prediction-like perturbation of a label map: shifts, erosion by random pixel
/// drops, relabeling, dropped and spurious objects.
inline LabelMap perturb(const LabelMap& gt, Rng& rng) {
  const int w = gt.width();
  const int h = gt.height();
  std::uniform_int_distribution<int> shift(-1, 1);
  std::bernoulli_distribution drop_px(0.08);
  std::bernoulli_distribution drop_obj(0.15);
  const Label k = nuclick::max_label(gt);
  std::vector<Label> perm(k + 1);
  for (Label i = 0; i <= k; ++i) perm[i] = i;
  std::shuffle(perm.begin() + 1, perm.end(), rng);
  std::vector<std::pair<int, int>> offset(k + 1);
  std::vector<bool> dropped(k + 1);
  for (Label i = 1; i <= k; ++i) {
    offset[i] = {shift(rng), shift(rng)};
    dropped[i] = drop_obj(rng);
  }
  LabelMap out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Label l = gt(x, y);
      if (!l || dropped[l] || drop_px(rng)) continue;
      const int nx = x + offset[l].first;
      const int ny = y + offset[l].second;
      if (out.contains(nx, ny)) out(nx, ny) = perm[l];
    }
  }
  auto extra = random_labels(w, h, rng, 2);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (extra[i] && !out[i]) out[i] = k + extra[i];
  }
  return out;
}

}  // namespace oracle
