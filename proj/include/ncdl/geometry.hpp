#pragma once

#include <cstdint>
#include <vector>

namespace ncdl {

// Axis-aligned rectangle with corner coordinates in image pixels.
// Valid iff x1 < x2 and y1 < y2 and all coordinates are finite.
struct Rect {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool valid() const;
  double area() const { return (x2 - x1) * (y2 - y1); }
};

enum class BoxSource { ClassAware, ClassAgnostic, Fused };

// One detection from one proposal stream.
struct DetBox {
  Rect rect;
  double score = 0.0;  // in [0,1]
  BoxSource source = BoxSource::ClassAware;
  std::int64_t image_id = 0;
  bool trusted = false;  // set by DRM alpha-thresholding
};

// Intersection-over-union of two valid rects. Throws std::invalid_argument
// on a degenerate rect.
double iou(const Rect& a, const Rect& b);

// Greedy suppression by descending score, ignoring class information.
// Ties broken by trusted flag, then smaller image_id, then input order.
// Output is score-sorted; no surviving pair has IoU > iou_thresh.
std::vector<DetBox> class_agnostic_nms(const std::vector<DetBox>& boxes,
                                       double iou_thresh);

}  // namespace ncdl
