#include "ncdl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ncdl/rng.hpp"

namespace ncdl {

void DetectorProfile::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(recall_known) || !prob(recall_unknown) ||
      !prob(misclassify_unknown_as_known)) {
    throw std::invalid_argument("DetectorProfile: probability out of [0,1]");
  }
  if (localization_jitter_sigma < 0.0 || score_spread < 0.0 ||
      fp_score_spread < 0.0 || false_positives_per_image < 0.0) {
    throw std::invalid_argument("DetectorProfile: negative spread/rate");
  }
}

void WorldConfig::validate() const {
  if (n_images <= 0 || known_classes <= 0 || unknown_classes <= 0 ||
      descriptor_dim <= 0) {
    throw std::invalid_argument("WorldConfig: non-positive count");
  }
  if (objects_min < 0 || objects_max < objects_min) {
    throw std::invalid_argument("WorldConfig: bad objects_per_image range");
  }
  if (canvas_w <= 0.0 || canvas_h <= 0.0) {
    throw std::invalid_argument("WorldConfig: bad canvas");
  }
  if (!(class_mean_separation > 0.0) || descriptor_noise_sigma < 0.0) {
    throw std::invalid_argument("WorldConfig: bad descriptor geometry");
  }
  aware.validate();
  agnostic.validate();
}

WorldConfig WorldConfig::defaults() {
  WorldConfig c;
  c.aware.recall_known = 0.95;
  c.aware.recall_unknown = 0.15;
  c.aware.localization_jitter_sigma = 1.5;
  c.aware.score_mean = 0.8;
  c.aware.score_spread = 0.1;
  c.aware.false_positives_per_image = 1.0;
  c.aware.misclassify_unknown_as_known = 0.05;
  c.agnostic.recall_known = 0.85;
  c.agnostic.recall_unknown = 0.85;
  c.agnostic.localization_jitter_sigma = 4.0;
  c.agnostic.score_mean = 0.6;
  c.agnostic.score_spread = 0.15;
  c.agnostic.false_positives_per_image = 2.0;
  c.agnostic.misclassify_unknown_as_known = 0.0;
  return c;
}

namespace {

Eigen::VectorXd random_unit_vector(int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
  const double n = v.norm();
  if (n == 0.0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / n;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

Rect random_rect(double canvas_w, double canvas_h, Rng& rng) {
  std::uniform_real_distribution<double> wfrac(0.08, 0.30);
  const double w = wfrac(rng) * canvas_w;
  const double h = wfrac(rng) * canvas_h;
  std::uniform_real_distribution<double> px(0.0, canvas_w - w);
  std::uniform_real_distribution<double> py(0.0, canvas_h - h);
  const double x = px(rng);
  const double y = py(rng);
  return {x, y, x + w, y + h};
}

}  // namespace

World generate_world(const WorldConfig& config) {
  config.validate();
  World world;
  world.canvas_w = config.canvas_w;
  world.canvas_h = config.canvas_h;
  const int n_classes = config.known_classes + config.unknown_classes;

  Rng class_rng(derive_seed(config.seed, 0xC1A5));
  world.class_means.resize(n_classes, config.descriptor_dim);
  for (int c = 0; c < n_classes; ++c) {
    world.class_means.row(c) =
        random_unit_vector(config.descriptor_dim, class_rng).transpose();
  }

  std::vector<Eigen::VectorXd> descriptor_rows;
  for (int img = 0; img < config.n_images; ++img) {
    Rng rng(derive_seed(config.seed, 0x1A000000ULL + static_cast<std::uint64_t>(img)));
    std::uniform_int_distribution<int> count_dist(config.objects_min,
                                                  config.objects_max);
    std::uniform_int_distribution<int> class_dist(0, n_classes - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int count = count_dist(rng);
    std::vector<GtBox>& image_boxes = world.gt.images[img];
    for (int o = 0; o < count; ++o) {
      // Overlap-rejection bias: retry a bounded number of times, then accept.
      Rect rect{};
      bool placed = false;
      for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
        rect = random_rect(config.canvas_w, config.canvas_h, rng);
        placed = true;
        for (const GtBox& existing : image_boxes) {
          if (iou(rect, existing.rect) > 0.3) {
            placed = false;
            break;
          }
        }
      }
      const int cls = class_dist(rng);
      const bool known = cls < config.known_classes;
      image_boxes.push_back({rect, cls, known});
      world.objects.push_back({img, rect, cls, known});

      Eigen::VectorXd d =
          config.class_mean_separation * world.class_means.row(cls).transpose();
      for (int j = 0; j < config.descriptor_dim; ++j) {
        d(j) += config.descriptor_noise_sigma * gauss(rng);
      }
      const double n = d.norm();
      descriptor_rows.push_back(n > 0.0 ? Eigen::VectorXd(d / n) : d);
    }
  }

  world.descriptors.resize(static_cast<Eigen::Index>(descriptor_rows.size()),
                           config.descriptor_dim);
  for (std::size_t i = 0; i < descriptor_rows.size(); ++i) {
    world.descriptors.row(static_cast<Eigen::Index>(i)) =
        descriptor_rows[i].transpose();
  }
  return world;
}

ProposalSet simulate_detector(const World& world, const DetectorProfile& profile,
                              BoxSource source, int detector_id,
                              std::uint64_t seed) {
  profile.validate();
  ProposalSet set;
  set.detector_id = detector_id;

  for (const auto& [image_id, boxes] : world.gt.images) {
    Rng rng(derive_seed(seed, 0xDE000000ULL + static_cast<std::uint64_t>(image_id)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (const GtBox& g : boxes) {
      double detect_p = g.known ? profile.recall_known : profile.recall_unknown;
      if (!g.known) {
        detect_p += (1.0 - detect_p) * profile.misclassify_unknown_as_known;
      }
      if (unif(rng) >= detect_p) continue;

      Rect r = g.rect;
      if (profile.localization_jitter_sigma > 0.0) {
        const double s = profile.localization_jitter_sigma;
        r.x1 += s * gauss(rng);
        r.y1 += s * gauss(rng);
        r.x2 += s * gauss(rng);
        r.y2 += s * gauss(rng);
        if (r.x2 <= r.x1 + 1.0) r.x2 = r.x1 + 1.0;
        if (r.y2 <= r.y1 + 1.0) r.y2 = r.y1 + 1.0;
      }
      const double score =
          clamp01(profile.score_mean + profile.score_spread * gauss(rng));
      set.boxes.push_back({r, score, source, image_id, false});
    }

    if (profile.false_positives_per_image > 0.0) {
      std::poisson_distribution<int> fp_count(profile.false_positives_per_image);
      const int fps = fp_count(rng);
      for (int f = 0; f < fps; ++f) {
        const Rect r = random_rect(world.canvas_w, world.canvas_h, rng);
        const double score =
            clamp01(profile.fp_score_mean + profile.fp_score_spread * gauss(rng));
        set.boxes.push_back({r, score, source, image_id, false});
      }
    }
  }
  return set;
}

Eigen::MatrixXd descriptors_for_boxes(const std::vector<GtObject>& objects,
                                      const Eigen::MatrixXd& object_descriptors,
                                      const std::vector<DetBox>& boxes,
                                      double match_iou, double noise_sigma,
                                      std::uint64_t seed) {
  if (object_descriptors.rows() != static_cast<Eigen::Index>(objects.size())) {
    throw std::invalid_argument(
        "descriptors_for_boxes: objects/descriptors size mismatch");
  }
  const int dim = static_cast<int>(object_descriptors.cols());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(boxes.size()), dim);
  Rng rng(derive_seed(seed, 0xD35C));
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Group object indices per image once.
  std::map<std::int64_t, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    by_image[objects[i].image_id].push_back(i);
  }

  for (std::size_t b = 0; b < boxes.size(); ++b) {
    std::size_t best = 0;
    double best_iou = -1.0;
    if (auto it = by_image.find(boxes[b].image_id); it != by_image.end()) {
      for (std::size_t obj : it->second) {
        const double v = iou(boxes[b].rect, objects[obj].rect);
        if (v > best_iou) {
          best_iou = v;
          best = obj;
        }
      }
    }
    Eigen::VectorXd d;
    if (best_iou >= match_iou) {
      d = object_descriptors.row(static_cast<Eigen::Index>(best)).transpose();
      for (int j = 0; j < dim; ++j) d(j) += noise_sigma * gauss(rng);
    } else {
      d = random_unit_vector(dim, rng);  // background patch
    }
    const double n = d.norm();
    out.row(static_cast<Eigen::Index>(b)) =
        (n > 0.0 ? Eigen::VectorXd(d / n) : d).transpose();
  }
  return out;
}

}  // namespace ncdl
