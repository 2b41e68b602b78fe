#include "ncdl/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace ncdl {
namespace {

bool passes_filter(const GtBox& g, std::optional<bool> known_filter) {
  return !known_filter || g.known == *known_filter;
}

// Best-IoU unknown-class ground-truth match for one instance.
struct InstanceMatch {
  bool valid = false;
  int class_id = -1;
  double iou_value = 0.0;
};

InstanceMatch match_unknown(const DetBox& box, const GroundTruth& gt,
                            double iou_thresh) {
  InstanceMatch m;
  auto it = gt.images.find(box.image_id);
  if (it == gt.images.end()) return m;
  for (const GtBox& g : it->second) {
    if (g.known) continue;
    const double v = iou(box.rect, g.rect);
    if (v > m.iou_value || (v == m.iou_value && m.class_id < 0)) {
      m.iou_value = v;
      m.class_id = g.class_id;
    }
  }
  m.valid = m.class_id >= 0 && m.iou_value >= iou_thresh;
  if (!m.valid) m.class_id = -1;
  return m;
}

struct ClusterStat {
  std::int64_t size = 0;
  std::int64_t valid = 0;
  int modal_class = -1;
  std::int64_t modal_count = 0;
  double purity = 0.0;
};

std::vector<ClusterStat> cluster_stats(
    const std::vector<ClusteredInstance>& instances, int k,
    const GroundTruth& gt, double iou_thresh) {
  std::vector<ClusterStat> stats(k);
  std::vector<std::map<int, std::int64_t>> class_counts(k);
  for (const ClusteredInstance& inst : instances) {
    if (inst.cluster < 0 || inst.cluster >= k) {
      throw std::invalid_argument("cluster index out of [0, k)");
    }
    ClusterStat& s = stats[inst.cluster];
    s.size++;
    const InstanceMatch m = match_unknown(inst.box, gt, iou_thresh);
    if (m.valid) {
      s.valid++;
      class_counts[inst.cluster][m.class_id]++;
    }
  }
  for (int c = 0; c < k; ++c) {
    for (const auto& [cls, count] : class_counts[c]) {
      if (count > stats[c].modal_count) {
        stats[c].modal_count = count;
        stats[c].modal_class = cls;
      }
    }
    stats[c].purity = stats[c].size > 0
                          ? static_cast<double>(stats[c].modal_count) /
                                static_cast<double>(stats[c].size)
                          : 0.0;
  }
  return stats;
}

}  // namespace

double corloc(const std::vector<DetBox>& proposals, const GroundTruth& gt,
              double iou_thresh, std::optional<bool> known_filter) {
  // Top-scoring proposal per image.
  std::map<std::int64_t, const DetBox*> top;
  for (const DetBox& b : proposals) {
    auto [it, inserted] = top.emplace(b.image_id, &b);
    if (!inserted && b.score > it->second->score) it->second = &b;
  }

  std::int64_t eligible = 0;
  std::int64_t correct = 0;
  for (const auto& [image_id, boxes] : gt.images) {
    bool has_gt = false;
    for (const GtBox& g : boxes) has_gt = has_gt || passes_filter(g, known_filter);
    if (!has_gt) continue;
    eligible++;
    auto it = top.find(image_id);
    if (it == top.end()) continue;
    for (const GtBox& g : boxes) {
      if (passes_filter(g, known_filter) &&
          iou(it->second->rect, g.rect) > iou_thresh) {
        correct++;
        break;
      }
    }
  }
  if (eligible == 0) throw std::invalid_argument("corloc: no eligible images");
  return static_cast<double>(correct) / static_cast<double>(eligible);
}

double detection_recall(const std::vector<DetBox>& proposals,
                        const GroundTruth& gt, double iou_thresh,
                        std::optional<bool> known_filter) {
  std::map<std::int64_t, std::vector<const DetBox*>> by_image;
  for (const DetBox& b : proposals) by_image[b.image_id].push_back(&b);

  std::int64_t total = 0;
  std::int64_t hit = 0;
  for (const auto& [image_id, boxes] : gt.images) {
    auto it = by_image.find(image_id);
    for (const GtBox& g : boxes) {
      if (!passes_filter(g, known_filter)) continue;
      total++;
      if (it == by_image.end()) continue;
      for (const DetBox* p : it->second) {
        if (iou(p->rect, g.rect) >= iou_thresh) {
          hit++;
          break;
        }
      }
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(hit) / static_cast<double>(total);
}

PurityCurve purity_coverage_auc(const std::vector<ClusteredInstance>& instances,
                                int k, const GroundTruth& gt,
                                double iou_thresh) {
  std::vector<ClusterStat> stats = cluster_stats(instances, k, gt, iou_thresh);
  std::int64_t total_valid = 0;
  for (const ClusterStat& s : stats) total_valid += s.valid;

  PurityCurve curve;
  if (total_valid == 0) return curve;  // auc 0, empty curve

  // Index-free ordering so relabeling clusters cannot change the curve.
  std::sort(stats.begin(), stats.end(), [](const ClusterStat& a,
                                           const ClusterStat& b) {
    if (a.purity != b.purity) return a.purity > b.purity;
    if (a.valid != b.valid) return a.valid > b.valid;
    return a.size > b.size;
  });

  double coverage = 0.0;
  double purity_sum = 0.0;
  double auc = 0.0;
  double prev_coverage = 0.0;
  double prev_purity = stats.front().purity;
  curve.points.emplace_back(0.0, prev_purity);
  for (std::size_t j = 0; j < stats.size(); ++j) {
    coverage += static_cast<double>(stats[j].valid) /
                static_cast<double>(total_valid);
    purity_sum += stats[j].purity;
    const double running = purity_sum / static_cast<double>(j + 1);
    curve.points.emplace_back(coverage, running);
    auc += (coverage - prev_coverage) * 0.5 * (running + prev_purity);
    prev_coverage = coverage;
    prev_purity = running;
  }
  curve.auc = auc;
  return curve;
}

int discovered_classes(const std::vector<ClusteredInstance>& instances, int k,
                       const GroundTruth& gt, double iou_thresh,
                       double purity_min) {
  const std::vector<ClusterStat> stats =
      cluster_stats(instances, k, gt, iou_thresh);
  std::set<int> discovered;
  for (const ClusterStat& s : stats) {
    if (s.modal_class >= 0 && s.purity >= purity_min) {
      discovered.insert(s.modal_class);
    }
  }
  return static_cast<int>(discovered.size());
}

namespace {

// All-point-interpolated average precision from a ranked TP/FP sequence.
double average_precision(const std::vector<bool>& tp_ranked,
                         std::int64_t n_gt) {
  if (n_gt == 0) return 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::int64_t tp = 0;
  std::int64_t seen = 0;
  for (bool is_tp : tp_ranked) {
    seen++;
    if (is_tp) tp++;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  // Precision envelope.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

double cluster_ap_at(const std::vector<ClusteredInstance>& instances, int k,
                     const GroundTruth& gt, double iou_thresh) {
  // Cluster labels come from the modal valid class at the base IoU 0.5.
  const std::vector<ClusterStat> stats = cluster_stats(instances, k, gt, 0.5);

  // Detections grouped by inherited class label.
  std::map<int, std::vector<const ClusteredInstance*>> by_class;
  for (const ClusteredInstance& inst : instances) {
    const int label = stats[inst.cluster].modal_class;
    if (label >= 0) by_class[label].push_back(&inst);
  }

  // Unknown-class ground truth per class.
  std::map<int, std::int64_t> gt_counts;
  for (const auto& [image_id, boxes] : gt.images) {
    for (const GtBox& g : boxes) {
      if (!g.known) gt_counts[g.class_id]++;
    }
  }
  if (gt_counts.empty()) return 0.0;

  double ap_sum = 0.0;
  for (const auto& [cls, n_gt] : gt_counts) {
    std::vector<const ClusteredInstance*> dets;
    if (auto it = by_class.find(cls); it != by_class.end()) dets = it->second;
    std::stable_sort(dets.begin(), dets.end(),
                     [](const ClusteredInstance* a, const ClusteredInstance* b) {
                       if (a->box.score != b->box.score) {
                         return a->box.score > b->box.score;
                       }
                       return a->box.image_id < b->box.image_id;
                     });

    // Greedy matching: each gt box consumed at most once.
    std::map<std::int64_t, std::vector<bool>> used;
    std::vector<bool> tp_ranked;
    tp_ranked.reserve(dets.size());
    for (const ClusteredInstance* d : dets) {
      auto img = gt.images.find(d->box.image_id);
      int best = -1;
      double best_iou = 0.0;
      if (img != gt.images.end()) {
        auto& consumed = used[d->box.image_id];
        consumed.resize(img->second.size(), false);
        for (std::size_t g = 0; g < img->second.size(); ++g) {
          const GtBox& gbox = img->second[g];
          if (gbox.known || gbox.class_id != cls || consumed[g]) continue;
          const double v = iou(d->box.rect, gbox.rect);
          if (v >= iou_thresh && v > best_iou) {
            best_iou = v;
            best = static_cast<int>(g);
          }
        }
        if (best >= 0) consumed[best] = true;
      }
      tp_ranked.push_back(best >= 0);
    }
    ap_sum += average_precision(tp_ranked, n_gt);
  }
  return ap_sum / static_cast<double>(gt_counts.size());
}

std::pair<double, double> cluster_map(
    const std::vector<ClusteredInstance>& instances, int k,
    const GroundTruth& gt) {
  double sum = 0.0;
  int count = 0;
  double ap50 = 0.0;
  for (double t = 0.5; t < 0.951; t += 0.05) {
    const double ap = cluster_ap_at(instances, k, gt, t);
    if (count == 0) ap50 = ap;
    sum += ap;
    count++;
  }
  return {sum / static_cast<double>(count), ap50};
}

}  // namespace ncdl
