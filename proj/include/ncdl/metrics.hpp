#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ncdl/geometry.hpp"

namespace ncdl {

struct GtBox {
  Rect rect;
  int class_id = 0;
  bool known = true;
};

// Per-image ground truth; the map is ordered so iteration is deterministic.
struct GroundTruth {
  std::map<std::int64_t, std::vector<GtBox>> images;
};

// One clustered instance: the detection it came from plus its cluster index.
struct ClusteredInstance {
  DetBox box;
  int cluster = 0;
};

// Fraction of images (with >= 1 ground-truth box, optionally filtered by the
// known flag) whose top-scoring proposal overlaps some ground-truth box with
// IoU > iou_thresh.
double corloc(const std::vector<DetBox>& proposals, const GroundTruth& gt,
              double iou_thresh = 0.5,
              std::optional<bool> known_filter = std::nullopt);

// Fraction of ground-truth boxes (optionally filtered by the known flag)
// matched by at least one proposal with IoU >= iou_thresh.
double detection_recall(const std::vector<DetBox>& proposals,
                        const GroundTruth& gt, double iou_thresh = 0.5,
                        std::optional<bool> known_filter = std::nullopt);

struct PurityCurve {
  std::vector<std::pair<double, double>> points;  // (coverage, running purity)
  double auc = 0.0;
};

// Purity-coverage curve over clusters sorted by purity (descending), with
// instances matched to unknown-class ground truth at iou_thresh; auc is the
// trapezoidal area under the curve.
PurityCurve purity_coverage_auc(const std::vector<ClusteredInstance>& instances,
                                int k, const GroundTruth& gt, double iou_thresh);

// Number of distinct unknown classes that are the modal valid class of some
// cluster with purity >= purity_min.
int discovered_classes(const std::vector<ClusteredInstance>& instances, int k,
                       const GroundTruth& gt, double iou_thresh,
                       double purity_min = 0.5);

// Cluster-based detection AP over unknown classes: clusters take the label of
// their modal valid class (matched at IoU 0.5); detections inherit it and keep
// their scores. Returns (AP averaged over IoU 0.5:0.05:0.95, AP50).
std::pair<double, double> cluster_map(
    const std::vector<ClusteredInstance>& instances, int k,
    const GroundTruth& gt);

// AP at a single IoU threshold, exposed for tests.
double cluster_ap_at(const std::vector<ClusteredInstance>& instances, int k,
                     const GroundTruth& gt, double iou_thresh);

struct EvalReport {
  double corloc = 0.0;
  std::map<double, double> auc;  // IoU threshold -> AuC
  int discovered_classes = 0;
  double ap = 0.0;
  double ap50 = 0.0;
  std::map<double, PurityCurve> curves;
};

}  // namespace ncdl
