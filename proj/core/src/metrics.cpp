#include "nuclick/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "nuclick/morph.hpp"

namespace nuclick::metrics {

namespace {

// Pairwise intersection counts between GT and predicted labels.
struct Overlap {
  std::vector<std::size_t> gt_area;
  std::vector<std::size_t> pred_area;
  std::vector<std::size_t> inter;  // (gt + 1) x (pred + 1), row-major
  std::size_t pred_stride = 0;

  Overlap(const LabelMap& gt, const LabelMap& pred) {
    require_same_size(gt, pred, "metrics");
    gt_area = morph::areas(gt);
    pred_area = morph::areas(pred);
    pred_stride = pred_area.size();
    inter.assign(gt_area.size() * pred_stride, 0);
    for (std::size_t i = 0; i < gt.pixel_count(); ++i) ++inter[gt[i] * pred_stride + pred[i]];
  }

  std::size_t at(std::size_t g, std::size_t p) const { return inter[g * pred_stride + p]; }
  double iou(std::size_t g, std::size_t p) const {
    const double i = static_cast<double>(at(g, p));
    return i / static_cast<double>(gt_area[g] + pred_area[p] - at(g, p));
  }
  int gt_count() const { return count(gt_area); }
  int pred_count() const { return count(pred_area); }

  static int count(const std::vector<std::size_t>& a) {
    int n = 0;
    for (std::size_t k = 1; k < a.size(); ++k) n += a[k] > 0;
    return n;
  }
};

struct Match {
  std::size_t gt;
  std::size_t pred;
  double iou;
};

std::vector<Match> iou_matches(const Overlap& o) {
  std::vector<Match> matches;
  std::vector<char> pred_used(o.pred_area.size(), 0);
  for (std::size_t g = 1; g < o.gt_area.size(); ++g) {
    if (o.gt_area[g] == 0) continue;
    int found = 0;
    for (std::size_t p = 1; p < o.pred_area.size(); ++p) {
      if (o.at(g, p) == 0) continue;
      const double iou = o.iou(g, p);
      if (iou > kMatchIou) {
        // IoU > 0.5 admits at most one partner per object.
        if (++found > 1 || pred_used[p]) throw Error("panoptic matching is not unique");
        pred_used[p] = 1;
        matches.push_back({g, p, iou});
      }
    }
  }
  return matches;
}

BinaryMask crop_mask(const LabelMap& labels, Label id) { return mask_of(labels, id); }

}  // namespace

double aji(const LabelMap& gt, const LabelMap& pred) {
  const Overlap o(gt, pred);
  std::vector<char> used(o.pred_area.size(), 0);
  double inter = 0.0;
  double uni = 0.0;
  for (std::size_t g = 1; g < o.gt_area.size(); ++g) {
    if (o.gt_area[g] == 0) continue;
    std::size_t best = 0;
    double best_iou = -1.0;
    for (std::size_t p = 1; p < o.pred_area.size(); ++p) {
      if (used[p] || o.at(g, p) == 0) continue;
      const double iou = o.iou(g, p);
      if (iou > best_iou) {
        best_iou = iou;
        best = p;
      }
    }
    if (best == 0) {
      uni += static_cast<double>(o.gt_area[g]);
      continue;
    }
    used[best] = 1;
    inter += static_cast<double>(o.at(g, best));
    uni += static_cast<double>(o.gt_area[g] + o.pred_area[best] - o.at(g, best));
  }
  for (std::size_t p = 1; p < o.pred_area.size(); ++p) {
    if (!used[p]) uni += static_cast<double>(o.pred_area[p]);
  }
  return uni == 0.0 ? 1.0 : inter / uni;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a, b, "dice");
  std::size_t inter = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    inter += x && y;
    total += static_cast<std::size_t>(x) + static_cast<std::size_t>(y);
  }
  return total == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

Panoptic panoptic(const LabelMap& gt, const LabelMap& pred) {
  const Overlap o(gt, pred);
  const auto matches = iou_matches(o);
  Panoptic r;
  r.tp = static_cast<int>(matches.size());
  r.fn = o.gt_count() - r.tp;
  r.fp = o.pred_count() - r.tp;
  if (r.tp + r.fp + r.fn == 0) return {1.0, 1.0, 1.0, 0, 0, 0};
  r.dq = 2.0 * r.tp / (2.0 * r.tp + r.fp + r.fn);
  double sum = 0.0;
  for (const auto& m : matches) sum += m.iou;
  r.sq = r.tp ? sum / r.tp : 0.0;
  r.pq = r.dq * r.sq;
  return r;
}

double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a, b, "hausdorff");
  if (count_foreground(a) == 0 || count_foreground(b) == 0) throw InvalidInput("hausdorff: empty mask");
  const auto ba = morph::boundary(a);
  const auto bb = morph::boundary(b);
  const auto to_a = morph::squared_distance_to(ba);
  const auto to_b = morph::squared_distance_to(bb);
  std::int64_t worst = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (ba[i]) worst = std::max(worst, to_b[i]);
    if (bb[i]) worst = std::max(worst, to_a[i]);
  }
  return std::sqrt(static_cast<double>(worst));
}

ObjectLevel object_level(const LabelMap& gt, const LabelMap& pred) {
  const Overlap o(gt, pred);
  const auto matches = iou_matches(o);
  const int tp = static_cast<int>(matches.size());
  const int fn = o.gt_count() - tp;
  const int fp = o.pred_count() - tp;
  if (tp + fp + fn == 0) return {1.0, 1.0, 0.0};
  ObjectLevel r;
  r.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
  double weight = 0.0;
  double dice_sum = 0.0;
  double haus_sum = 0.0;
  for (const auto& m : matches) {
    const double w = static_cast<double>(o.gt_area[m.gt]);
    const double d = 2.0 * static_cast<double>(o.at(m.gt, m.pred)) / static_cast<double>(o.gt_area[m.gt] + o.pred_area[m.pred]);
    weight += w;
    dice_sum += w * d;
    haus_sum += w * hausdorff(crop_mask(gt, static_cast<Label>(m.gt)), crop_mask(pred, static_cast<Label>(m.pred)));
  }
  if (weight > 0) {
    r.dice = dice_sum / weight;
    r.hausdorff_mean = haus_sum / weight;
  }
  return r;
}

MetricReport evaluate(const LabelMap& gt, const LabelMap& pred) {
  MetricReport r;
  r.aji = aji(gt, pred);
  r.dice = dice(foreground_of(gt), foreground_of(pred));
  const auto pan = panoptic(gt, pred);
  r.dq = pan.dq;
  r.sq = pan.sq;
  r.pq = pan.pq;
  r.matched = pan.tp;
  r.missed = pan.fn;
  r.spurious = pan.fp;
  const auto obj = object_level(gt, pred);
  r.obj_f1 = obj.f1;
  r.obj_dice = obj.dice;
  r.hausdorff_mean = obj.hausdorff_mean;
  return r;
}

MetricReport average(const std::vector<MetricReport>& reports) {
  MetricReport m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.aji += r.aji;
    m.dice += r.dice;
    m.dq += r.dq;
    m.sq += r.sq;
    m.pq += r.pq;
    m.hausdorff_mean += r.hausdorff_mean;
    m.obj_f1 += r.obj_f1;
    m.obj_dice += r.obj_dice;
    m.matched += r.matched;
    m.missed += r.missed;
    m.spurious += r.spurious;
  }
  const double n = static_cast<double>(reports.size());
  m.aji /= n;
  m.dice /= n;
  m.dq /= n;
  m.sq /= n;
  m.pq /= n;
  m.hausdorff_mean /= n;
  m.obj_f1 /= n;
  m.obj_dice /= n;
  return m;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"aji", r.aji},           {"dice", r.dice},
          {"dq", r.dq},             {"sq", r.sq},
          {"pq", r.pq},             {"hausdorff_mean", r.hausdorff_mean},
          {"obj_f1", r.obj_f1},     {"obj_dice", r.obj_dice},
          {"matched", r.matched},   {"missed", r.missed},
          {"spurious", r.spurious}};
}

std::string to_table(const MetricReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto row = [&](const char* name, double v) { os << std::left << std::setw(16) << name << std::right << std::setw(10) << v << '\n'; };
  row("AJI", r.aji);
  row("Dice", r.dice);
  row("DQ", r.dq);
  row("SQ", r.sq);
  row("PQ", r.pq);
  row("Hausdorff", r.hausdorff_mean);
  row("Object F1", r.obj_f1);
  row("Object Dice", r.obj_dice);
  os << std::setprecision(0);
  row("Matched", r.matched);
  row("Missed", r.missed);
  row("Spurious", r.spurious);
  return os.str();
}

}  // namespace nuclick::metrics
