#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ncdl/drm.hpp"
#include "ncdl/metrics.hpp"

namespace ncdl {

// Behavior knobs for one simulated detector stream.
struct DetectorProfile {
  double recall_known = 0.95;
  double recall_unknown = 0.2;
  double localization_jitter_sigma = 1.5;  // box corner noise, px
  double score_mean = 0.8;                 // raw scores for true boxes
  double score_spread = 0.1;
  double false_positives_per_image = 1.0;  // Poisson rate
  double fp_score_mean = 0.25;
  double fp_score_spread = 0.1;
  double misclassify_unknown_as_known = 0.0;

  void validate() const;
};

struct WorldConfig {
  int n_images = 500;
  int known_classes = 20;
  int unknown_classes = 60;
  int objects_min = 1;
  int objects_max = 6;
  double canvas_w = 640.0;
  double canvas_h = 480.0;
  int descriptor_dim = 32;
  double class_mean_separation = 1.0;
  double descriptor_noise_sigma = 0.1;
  DetectorProfile aware;    // class-aware: precise on known, blind on unknown
  DetectorProfile agnostic; // class-agnostic: general but loose
  std::uint64_t seed = 0;

  void validate() const;
  static WorldConfig defaults();
};

struct GtObject {
  std::int64_t image_id = 0;
  Rect rect;
  int class_id = 0;
  bool known = true;
};

struct World {
  GroundTruth gt;
  double canvas_w = 640.0;
  double canvas_h = 480.0;
  std::vector<GtObject> objects;   // row i of descriptors belongs to objects[i]
  Eigen::MatrixXd descriptors;     // n_objects x descriptor_dim, unit rows
  Eigen::MatrixXd class_means;     // (known+unknown) x descriptor_dim, unit rows
};

// Scene generation: random rect placement with an overlap-rejection bias,
// class-conditional unit-sphere descriptors. Deterministic under seed; rng
// streams are split per image.
World generate_world(const WorldConfig& config);

// One detector stream over the world: class-conditional recall, corner
// jitter, profile score model, Poisson false positives.
ProposalSet simulate_detector(const World& world, const DetectorProfile& profile,
                              BoxSource source, int detector_id,
                              std::uint64_t seed);

// Patch descriptors for arbitrary boxes: a box takes the descriptor of its
// best-IoU ground-truth object (plus noise) when the overlap reaches
// match_iou, otherwise a random background direction. Row i of
// `object_descriptors` belongs to objects[i].
Eigen::MatrixXd descriptors_for_boxes(const std::vector<GtObject>& objects,
                                      const Eigen::MatrixXd& object_descriptors,
                                      const std::vector<DetBox>& boxes,
                                      double match_iou, double noise_sigma,
                                      std::uint64_t seed);

}  // namespace ncdl
