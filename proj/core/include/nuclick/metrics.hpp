#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuclick/raster.hpp"

namespace nuclick {

struct MetricReport {
  double aji = 0.0;
  double dice = 0.0;
  double dq = 0.0;
  double sq = 0.0;
  double pq = 0.0;
  double hausdorff_mean = 0.0;
  double obj_f1 = 0.0;
  double obj_dice = 0.0;
  int matched = 0;
  int missed = 0;
  int spurious = 0;
};

namespace metrics {

/// IoU threshold for a true positive (strict).
constexpr double kMatchIou = 0.5;

/// Aggregated Jaccard Index. GT instances are visited in label order; each takes
/// its highest-IoU unused overlapping prediction (lowest label on ties).
double aji(const LabelMap& gt, const LabelMap& pred);

/// 2|A n B| / (|A| + |B|), 1 when both are empty.
double dice(const BinaryMask& a, const BinaryMask& b);

struct Panoptic {
  double dq = 0.0;
  double sq = 0.0;
  double pq = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

/// DQ = 2TP / (2TP + FP + FN), SQ = mean matched IoU, PQ = DQ * SQ. Empty vs empty is (1, 1, 1).
Panoptic panoptic(const LabelMap& gt, const LabelMap& pred);

/// Symmetric Hausdorff distance between the boundary pixel sets; throws on an empty mask.
double hausdorff(const BinaryMask& a, const BinaryMask& b);

struct ObjectLevel {
  double f1 = 0.0;
  double dice = 0.0;
  double hausdorff_mean = 0.0;
};

/// F1 from IoU > 0.5 matching; dice and Hausdorff are GT-area-weighted means over matched pairs.
ObjectLevel object_level(const LabelMap& gt, const LabelMap& pred);

MetricReport evaluate(const LabelMap& gt, const LabelMap& pred);

/// Field-wise mean (counts are summed).
MetricReport average(const std::vector<MetricReport>& reports);

nlohmann::json to_json(const MetricReport& r);
std::string to_table(const MetricReport& r);

}  // namespace metrics
}  // namespace nuclick
