#include "ncdl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ncdl {

bool Rect::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 < x2 && y1 < y2;
}

double iou(const Rect& a, const Rect& b) {
  if (!a.valid() || !b.valid()) {
    throw std::invalid_argument("iou: degenerate rect");
  }
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

namespace {

// Suppression order: score desc, trusted first, smaller image_id, input order.
bool nms_before(const DetBox& a, std::size_t ia, const DetBox& b,
                std::size_t ib) {
  if (a.score != b.score) return a.score > b.score;
  if (a.trusted != b.trusted) return a.trusted;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  return ia < ib;
}

}  // namespace

std::vector<DetBox> class_agnostic_nms(const std::vector<DetBox>& boxes,
                                       double iou_thresh) {
  if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) {
    throw std::invalid_argument("class_agnostic_nms: iou_thresh out of (0,1)");
  }
  for (const auto& b : boxes) {
    if (!(b.score >= 0.0 && b.score <= 1.0)) {
      throw std::invalid_argument("class_agnostic_nms: score out of [0,1]");
    }
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nms_before(boxes[a], a, boxes[b], b);
  });

  std::vector<DetBox> kept;
  for (std::size_t idx : order) {
    const DetBox& cand = boxes[idx];
    bool suppressed = false;
    for (const DetBox& k : kept) {
      if (iou(k.rect, cand.rect) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

}  // namespace ncdl
