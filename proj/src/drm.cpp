#include "ncdl/drm.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ncdl {

void DrmParams::validate() const {
  if (beta1 > alpha1 || beta2 > alpha2) {
    throw std::invalid_argument("DrmParams: beta must not exceed alpha");
  }
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) {
    throw std::invalid_argument("DrmParams: nms_iou out of (0,1)");
  }
}

ProposalSet calibrate_scores(const ProposalSet& set) {
  const std::size_t n = set.boxes.size();
  if (n == 0) throw std::invalid_argument("calibrate_scores: empty proposal set");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.boxes[a].score < set.boxes[b].score;
  });

  ProposalSet out = set;
  // Tie blocks get the mean rank of the block; calibrated = mean_rank / n.
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           set.boxes[order[j + 1]].score == set.boxes[order[i]].score) {
      ++j;
    }
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    const double calibrated = mean_rank / static_cast<double>(n);
    for (std::size_t t = i; t <= j; ++t) out.boxes[order[t]].score = calibrated;
    i = j + 1;
  }
  return out;
}

ProposalSet filter_thresholds(const ProposalSet& set, double alpha,
                              double beta) {
  if (beta > alpha) {
    throw std::invalid_argument("filter_thresholds: beta > alpha");
  }
  ProposalSet out;
  out.detector_id = set.detector_id;
  for (const DetBox& b : set.boxes) {
    if (b.score < beta) continue;
    DetBox kept = b;
    kept.trusted = b.score >= alpha;
    out.boxes.push_back(kept);
  }
  return out;
}

namespace {

std::vector<DetBox> calibrate_and_filter(const ProposalSet& set, double alpha,
                                         double beta) {
  if (set.boxes.empty()) return {};
  return filter_thresholds(calibrate_scores(set), alpha, beta).boxes;
}

}  // namespace

std::vector<DetBox> debiased_region_mining(const ProposalSet& set_a,
                                           const ProposalSet& set_b,
                                           const DrmParams& params) {
  params.validate();
  if (!set_a.boxes.empty() && !set_b.boxes.empty() &&
      set_a.detector_id == set_b.detector_id) {
    throw std::invalid_argument("debiased_region_mining: same detector_id");
  }

  std::vector<DetBox> merged =
      calibrate_and_filter(set_a, params.alpha1, params.beta1);
  std::vector<DetBox> from_b =
      calibrate_and_filter(set_b, params.alpha2, params.beta2);
  merged.insert(merged.end(), from_b.begin(), from_b.end());

  // Suppression across images is meaningless: NMS runs per image_id.
  std::map<std::int64_t, std::vector<DetBox>> per_image;
  for (const DetBox& b : merged) per_image[b.image_id].push_back(b);

  std::vector<DetBox> fused;
  for (auto& [image_id, boxes] : per_image) {
    for (DetBox b : class_agnostic_nms(boxes, params.nms_iou)) {
      b.source = BoxSource::Fused;
      fused.push_back(b);
    }
  }
  std::stable_sort(fused.begin(), fused.end(),
                   [](const DetBox& a, const DetBox& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.trusted != b.trusted) return a.trusted;
                     return a.image_id < b.image_id;
                   });
  return fused;
}

}  // namespace ncdl
