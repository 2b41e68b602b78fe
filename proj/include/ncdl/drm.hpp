#pragma once

#include <vector>

#include "ncdl/geometry.hpp"

namespace ncdl {

// All boxes of one detector stream over an image collection.
struct ProposalSet {
  std::vector<DetBox> boxes;  // homogeneous source
  int detector_id = 1;
};

struct DrmParams {
  double alpha1 = 0.9;  // trusted threshold, detector 1
  double beta1 = 0.2;   // discard threshold, detector 1
  double alpha2 = 0.9;
  double beta2 = 0.2;
  double nms_iou = 0.5;

  void validate() const;
};

// Replaces each box score by its empirical-CDF percentile within the set
// (mean rank / n for tie blocks). Rank order is preserved; output scores
// lie in (0,1]. Throws on an empty set.
ProposalSet calibrate_scores(const ProposalSet& set);

// Drops boxes with calibrated score < beta; marks boxes with calibrated
// score >= alpha as trusted. Requires beta <= alpha.
ProposalSet filter_thresholds(const ProposalSet& set, double alpha,
                              double beta);

// Full DRM fusion: calibrate each stream, threshold with its own
// (alpha_i, beta_i), merge, then class-agnostic NMS per image with the
// trusted flag as first tie-break. Output carries source=Fused and
// calibrated scores, sorted by descending score.
std::vector<DetBox> debiased_region_mining(const ProposalSet& set_a,
                                           const ProposalSet& set_b,
                                           const DrmParams& params);

}  // namespace ncdl
