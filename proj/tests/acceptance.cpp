// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and uses its own oracle where
// one exists.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "ncdl/cluster.hpp"
#include "ncdl/drm.hpp"
#include "ncdl/embed.hpp"
#include "ncdl/geometry.hpp"
#include "ncdl/io.hpp"
#include "ncdl/metrics.hpp"
#include "ncdl/pipeline.hpp"
#include "ncdl/rng.hpp"
#include "ncdl/synth.hpp"

using namespace ncdl;
namespace fs = std::filesystem;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << (detail.tellp() > 0 ? "; " : "") << what;
    }
  }
};

Rect random_rect(Rng& rng, double span) {
  std::uniform_real_distribution<double> pos(0.0, span);
  std::uniform_real_distribution<double> size(1.0, span / 3.0);
  const double x = pos(rng);
  const double y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

// ---------------------------------------------------------------------------
// 1. NMS vs a brute-force pairwise suppressor; IoU property suite.

std::vector<DetBox> brute_nms(std::vector<DetBox> boxes, double thresh) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (boxes[a].score != boxes[b].score) return boxes[a].score > boxes[b].score;
    if (boxes[a].trusted != boxes[b].trusted) return boxes[a].trusted;
    if (boxes[a].image_id != boxes[b].image_id)
      return boxes[a].image_id < boxes[b].image_id;
    return a < b;
  });
  std::vector<bool> dead(boxes.size(), false);
  // Pairwise scan: every box is killed by any surviving earlier box.
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (dead[order[i]]) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!dead[order[j]] &&
          iou(boxes[order[i]].rect, boxes[order[j]].rect) > thresh) {
        dead[order[j]] = true;
      }
    }
  }
  std::vector<DetBox> kept;
  for (std::size_t i : order) {
    if (!dead[i]) kept.push_back(boxes[i]);
  }
  return kept;
}

Check criterion1() {
  Check c;
  c.expect(iou({0, 0, 2, 2}, {1, 1, 3, 3}) == 1.0 / 7.0, "hand case 1/7");
  Rng rng(101);
  for (int t = 0; t < 500; ++t) {
    const Rect a = random_rect(rng, 100.0);
    const Rect b = random_rect(rng, 100.0);
    const double v = iou(a, b);
    c.expect(v >= 0.0 && v <= 1.0, "iou bounds");
    c.expect(iou(a, b) == iou(b, a), "iou symmetry");
    c.expect(iou(a, a) == 1.0, "iou identity");
  }

  std::uniform_int_distribution<int> count(0, 50);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_real_distribution<double> thresh(0.2, 0.8);
  for (int t = 0; t < 1000; ++t) {
    std::vector<DetBox> boxes;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      boxes.push_back({random_rect(rng, 60.0), score(rng),
                       BoxSource::ClassAware, 0, (i % 5) == 0});
    }
    const double th = thresh(rng);
    const std::vector<DetBox> got = class_agnostic_nms(boxes, th);
    const std::vector<DetBox> want = brute_nms(boxes, th);
    bool equal = got.size() == want.size();
    for (std::size_t i = 0; equal && i < got.size(); ++i) {
      equal = got[i].rect.x1 == want[i].rect.x1 &&
              got[i].rect.y1 == want[i].rect.y1 &&
              got[i].score == want[i].score;
    }
    c.expect(equal, "nms mismatch at trial " + std::to_string(t));
    if (!equal) break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// 2. Calibration: invariance under increasing transforms, uniform ranks.

Check criterion2() {
  Check c;
  Rng rng(102);
  std::uniform_int_distribution<int> count(1, 300);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_real_distribution<double> coef(0.1, 3.0);
  for (int t = 0; t < 100; ++t) {
    ProposalSet set;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      double s = score(rng);
      if (i % 7 == 0 && i > 0) s = set.boxes[i - 1].score;  // inject ties
      set.boxes.push_back({random_rect(rng, 100.0), s, BoxSource::ClassAware, i % 4});
    }
    const ProposalSet base = calibrate_scores(set);

    // Strictly increasing map: a*tanh(b*s + c) + d*s with a,b,d > 0.
    const double a = coef(rng), b = coef(rng), d = coef(rng);
    const double off = score(rng);
    ProposalSet warped = set;
    for (DetBox& box : warped.boxes) {
      box.score = a * std::tanh(b * box.score + off) + d * box.score;
      box.score = 0.5 + std::atan(box.score) / 3.2;  // keep scores in [0,1]
    }
    const ProposalSet again = calibrate_scores(warped);
    for (int i = 0; i < n; ++i) {
      c.expect(base.boxes[i].score == again.boxes[i].score,
               "transform changed calibrated score, trial " + std::to_string(t));
      if (base.boxes[i].score != again.boxes[i].score) return c;
    }
  }

  // KS vs uniform at n = 10,000 with distinct raw scores (no ties).
  const int n = 10000;
  std::set<double> distinct;
  std::uniform_real_distribution<double> raw(0.0, 1.0);
  while (static_cast<int>(distinct.size()) < n) distinct.insert(raw(rng));
  ProposalSet set;
  int image = 0;
  for (double s : distinct) {
    set.boxes.push_back({{0, 0, 1, 1}, s, BoxSource::ClassAware, image++});
  }
  std::vector<double> cal;
  for (const DetBox& b : calibrate_scores(set).boxes) cal.push_back(b.score);
  std::sort(cal.begin(), cal.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - cal[i]));
    ks = std::max(ks, std::abs(cal[i] - static_cast<double>(i) / n));
  }
  c.expect(ks < 0.05, "KS statistic " + std::to_string(ks));
  return c;
}

// ---------------------------------------------------------------------------
// 3. Fusion ordering on the default 500-image world.

Check criterion3() {
  Check c;
  WorldConfig wc = WorldConfig::defaults();
  wc.seed = 303;
  const World world = generate_world(wc);
  const ProposalSet aware =
      simulate_detector(world, wc.aware, BoxSource::ClassAware, 1,
                        derive_seed(wc.seed, 11));
  const ProposalSet agnostic =
      simulate_detector(world, wc.agnostic, BoxSource::ClassAgnostic, 2,
                        derive_seed(wc.seed, 12));
  const DrmParams drm;
  const std::vector<DetBox> fused = debiased_region_mining(aware, agnostic, drm);

  const double aware_unknown = detection_recall(aware.boxes, world.gt, 0.5, false);
  const double fused_unknown = detection_recall(fused, world.gt, 0.5, false);
  const double agnostic_known = corloc(agnostic.boxes, world.gt, 0.5, true);
  const double fused_known = corloc(fused, world.gt, 0.5, true);

  c.detail << "fused unknown recall " << fused_unknown << " vs aware "
           << aware_unknown << "; fused known corloc " << fused_known
           << " vs agnostic " << agnostic_known;
  c.expect(fused_unknown >= aware_unknown + 0.2, "unknown recall margin");
  c.expect(fused_known >= agnostic_known, "known corloc ordering");
  return c;
}

// ---------------------------------------------------------------------------
// 4. Gradient check and loss identities.

Check criterion4() {
  Check c;
  Rng rng(104);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> patches(2, 6);
  std::uniform_int_distribution<int> lab(-1, 2);

  ContrastiveParams params;
  params.d_in = 5;
  params.d_hidden = 4;
  params.d_out = 3;
  params.tau = 0.3;
  params.lambda = 0.4;

  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    params.seed = 5000 + t;
    Embedder model = Embedder::init(params);
    const int n = patches(rng);
    std::vector<Eigen::VectorXd> views;
    std::vector<int> labels;
    for (int p = 0; p < n; ++p) {
      const int label = lab(rng);
      for (int v = 0; v < 2; ++v) {
        Eigen::VectorXd x(params.d_in);
        for (int j = 0; j < params.d_in; ++j) x(j) = gauss(rng);
        views.push_back(x);
        labels.push_back(label);
      }
    }
    const EmbedderGrad analytic = loss_gradient(model, views, labels, params);

    const double h = 1e-5;
    auto probe = [&](double* slot, double ga) {
      const double saved = *slot;
      *slot = saved + h;
      const double lp = loss_gradient(model, views, labels, params).loss;
      *slot = saved - h;
      const double lm = loss_gradient(model, views, labels, params).loss;
      *slot = saved;
      const double gn = (lp - lm) / (2.0 * h);
      worst = std::max(worst, std::abs(ga - gn) / std::max(1.0, std::abs(gn)));
    };
    for (int i = 0; i < model.w1.size(); ++i)
      probe(model.w1.data() + i, analytic.w1(i));
    for (int i = 0; i < model.b1.size(); ++i)
      probe(model.b1.data() + i, analytic.b1(i));
    for (int i = 0; i < model.w2.size(); ++i)
      probe(model.w2.data() + i, analytic.w2(i));
    for (int i = 0; i < model.b2.size(); ++i)
      probe(model.b2.data() + i, analytic.b2(i));
  }
  c.detail << "max grad rel err " << worst;
  c.expect(worst <= 1e-5, "gradient mismatch");

  // Identical embeddings: every per-view loss is log(2N - 1).
  for (int n : {2, 4, 8}) {
    ViewBatch batch;
    batch.z = Eigen::MatrixXd::Zero(2 * n, 3);
    batch.z.col(0).setOnes();
    batch.labels.assign(2 * n, 0);
    for (int i = 0; i < 2 * n; ++i) {
      c.expect(std::abs(unsup_loss(i, batch, 0.5) - std::log(2.0 * n - 1.0)) <=
                   1e-9,
               "log(2N-1) identity");
    }
  }

  // Lambda endpoints reproduce the constituent sums.
  ViewBatch batch;
  batch.z = Eigen::MatrixXd(8, 3);
  for (int i = 0; i < batch.z.size(); ++i) batch.z.data()[i] = gauss(rng);
  batch.z.rowwise().normalize();
  batch.labels = {0, 0, -1, -1, 1, 1, 0, 0};
  double sum_u = 0.0;
  double sum_s = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    sum_u += unsup_loss(i, batch, params.tau);
    if (batch.labels[i] >= 0) sum_s += sup_loss(i, batch, params.tau);
  }
  ContrastiveParams at = params;
  at.lambda = 0.0;
  c.expect(std::abs(total_loss(batch, at) - sum_u) <= 1e-12, "lambda=0 endpoint");
  at.lambda = 1.0;
  c.expect(std::abs(total_loss(batch, at) - sum_s) <= 1e-12, "lambda=1 endpoint");
  return c;
}

// ---------------------------------------------------------------------------
// 5. Training effect on 3-class descriptors.

Check criterion5() {
  Check c;
  Rng rng(105);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int dim = 16;
  Eigen::MatrixXd means(3, dim);
  for (int i = 0; i < means.size(); ++i) means.data()[i] = gauss(rng);
  means.rowwise().normalize();

  std::vector<PatchDescriptor> data;
  std::vector<int> truth;
  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < 40; ++i) {
      Eigen::VectorXd x = means.row(cls).transpose();
      for (int j = 0; j < dim; ++j) x(j) += 0.15 * gauss(rng);
      x.normalize();
      data.push_back({x, i < 20 ? cls : -1});  // half labeled
      truth.push_back(cls);
    }
  }

  ContrastiveParams params;
  params.d_in = dim;
  params.d_hidden = 32;
  params.d_out = 8;
  params.tau = 0.2;
  params.lambda = 0.5;
  params.learning_rate = 0.1;
  params.epochs = 20;
  params.batch_size = 30;
  params.augment_noise_sigma = 0.05;
  params.seed = 1050;
  const TrainResult result = train_embedder(data, params);

  c.expect(result.epoch_loss.front() > result.epoch_loss.back(),
           "epoch loss did not decrease");

  Eigen::MatrixXd z(data.size(), params.d_out);
  for (std::size_t i = 0; i < data.size(); ++i) {
    z.row(i) = result.model.embed(data[i].vector).transpose();
  }
  double within = 0.0, between = 0.0;
  std::int64_t nw = 0, nb = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      const double cos = z.row(i).dot(z.row(j));
      if (truth[i] == truth[j]) {
        within += cos;
        nw++;
      } else {
        between += cos;
        nb++;
      }
    }
  }
  const double gap = within / nw - between / nb;
  c.detail << "loss " << result.epoch_loss.front() << " -> "
           << result.epoch_loss.back() << ", cosine gap " << gap;
  c.expect(gap >= 0.2, "cosine separation below 0.2");
  return c;
}

// ---------------------------------------------------------------------------
// 6. Clustering correctness.

Check criterion6() {
  Check c;
  Rng rng(106);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd X(50, 6);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
  ClusterParams one;
  one.k = 1;
  const Clustering mean_only = kmeans_full(X, one);
  c.expect((mean_only.centers.row(0) - X.colwise().mean()).cwiseAbs().maxCoeff() <=
               1e-9,
           "k=1 center is not the mean");

  // Separated blobs: exact recovery up to relabeling, and minibatch within
  // 1.1x of full inertia.
  Eigen::MatrixXd B(120, 6);
  std::vector<int> truth;
  for (int blob = 0; blob < 3; ++blob) {
    Eigen::RowVectorXd mu(6);
    for (int j = 0; j < 6; ++j) mu(j) = gauss(rng);
    mu *= 12.0 / mu.norm();
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 6; ++j) B(blob * 40 + i, j) = mu(j) + gauss(rng);
      truth.push_back(blob);
    }
  }
  ClusterParams params;
  params.k = 3;
  params.seed = 9;
  params.batch_size = 60;
  params.max_iters = 300;
  params.init_subset_size = 60;
  const Clustering full = kmeans_full(B, params);
  const Clustering mb = kmeans_minibatch(B, params);

  std::map<int, int> relabel;
  bool exact = true;
  for (int i = 0; i < 120; ++i) {
    auto [it, fresh] = relabel.emplace(truth[i], full.assignments[i]);
    if (!fresh && it->second != full.assignments[i]) exact = false;
  }
  c.expect(exact && relabel.size() == 3, "blob recovery not exact");
  c.detail << "minibatch inertia " << mb.inertia << " vs full " << full.inertia;
  c.expect(mb.inertia <= 1.1 * full.inertia, "minibatch inertia ratio");
  return c;
}

// ---------------------------------------------------------------------------
// 7. Minibatch scaling at n = 100k, d = 128, k = 1000.

Check criterion7() {
  Check c;
  const std::vector<BenchRow> rows =
      bench_cluster({10000, 100000}, {1000}, 128, 707);
  double full_100k = -1.0, mb_100k = -1.0, mb_10k = -1.0;
  for (const BenchRow& row : rows) {
    if (row.method == "kmeans_full" && row.n == 100000) full_100k = row.seconds;
    if (row.method == "kmeans_minibatch" && row.n == 100000) mb_100k = row.seconds;
    if (row.method == "kmeans_minibatch" && row.n == 10000) mb_10k = row.seconds;
  }
  c.detail << "full(100k) " << full_100k << " s, minibatch(100k) " << mb_100k
           << " s, minibatch(10k) " << mb_10k << " s";
  c.expect(full_100k > 0 && mb_100k > 0 && mb_10k > 0, "missing bench rows");
  c.expect(full_100k >= 10.0 * mb_100k, "speedup below 10x");
  c.expect(mb_100k <= 2.0 * mb_10k, "minibatch scaling above 2x");
  return c;
}

// ---------------------------------------------------------------------------
// 8. Over-clustering trend on the default world.

Check criterion8() {
  Check c;
  WorldConfig wc = WorldConfig::defaults();
  wc.seed = 808;
  const World world = generate_world(wc);
  const ProposalSet aware =
      simulate_detector(world, wc.aware, BoxSource::ClassAware, 1,
                        derive_seed(wc.seed, 11));
  const ProposalSet agnostic =
      simulate_detector(world, wc.agnostic, BoxSource::ClassAgnostic, 2,
                        derive_seed(wc.seed, 12));
  const std::vector<DetBox> fused =
      debiased_region_mining(aware, agnostic, DrmParams{});
  const Eigen::MatrixXd features = descriptors_for_boxes(
      world.objects, world.descriptors, fused, 0.3, 0.05,
      derive_seed(wc.seed, 13));

  ClusterParams params;
  params.seed = 81;
  params.batch_size = 256;
  params.max_iters = 300;
  params.init_subset_size = 10000;
  const int k_base = wc.unknown_classes;       // 60
  const int k_over = 5 * wc.unknown_classes;   // 300
  const auto [base, over] = overcluster_pair(features, k_base, k_over, params);

  auto instances = [&](const Clustering& clustering) {
    std::vector<ClusteredInstance> out;
    for (std::size_t i = 0; i < fused.size(); ++i) {
      out.push_back({fused[i], clustering.assignments[i]});
    }
    return out;
  };
  const double auc_base =
      purity_coverage_auc(instances(base), k_base, world.gt, 0.5).auc;
  const double auc_over =
      purity_coverage_auc(instances(over), k_over, world.gt, 0.5).auc;
  const int disc_base = discovered_classes(instances(base), k_base, world.gt, 0.5);
  const int disc_over = discovered_classes(instances(over), k_over, world.gt, 0.5);

  c.detail << "auc " << auc_base << " -> " << auc_over << ", discovered "
           << disc_base << " -> " << disc_over;
  c.expect(auc_over >= auc_base, "auc ordering");
  c.expect(disc_over >= disc_base, "discovered-class ordering");
  return c;
}

// ---------------------------------------------------------------------------
// 9. Metric oracles on hand fixtures; permutation invariance.

Check criterion9() {
  Check c;
  GroundTruth gt;
  gt.images[0] = {
      {{0, 0, 10, 10}, 100, false},   {{20, 0, 30, 10}, 100, false},
      {{40, 0, 50, 10}, 100, false},  {{0, 20, 10, 30}, 101, false},
      {{20, 20, 30, 30}, 101, false}, {{40, 40, 50, 50}, 1, true},
  };
  auto det = [](Rect r, double s, int cluster) {
    return ClusteredInstance{{r, s, BoxSource::Fused, 0}, cluster};
  };
  // Cluster sizes 4/4/2 with purities 3/4, 1/2, 1 -> by-hand curve
  // (0,1), (0.25,1), (0.75,0.875), (1,0.75); trapezoid area 0.921875.
  const std::vector<ClusteredInstance> instances = {
      det({0, 0, 10, 10}, 0.9, 0),     det({20, 0, 30, 10}, 0.8, 0),
      det({40, 0, 50, 10}, 0.7, 0),    det({0, 20, 10, 30}, 0.6, 0),
      det({20, 20, 30, 30}, 0.5, 1),   det({0, 20, 10, 30}, 0.4, 1),
      det({200, 200, 210, 210}, 0.3, 1), det({300, 300, 310, 310}, 0.2, 1),
      det({0, 0, 10, 10}, 0.95, 2),    det({20, 0, 30, 10}, 0.85, 2),
  };
  const PurityCurve curve = purity_coverage_auc(instances, 3, gt, 0.5);
  c.expect(curve.auc == 0.921875, "auc fixture");
  c.expect(discovered_classes(instances, 3, gt, 0.5, 0.5) == 2,
           "discovered fixture");

  // corloc against a direct per-image scan on a second fixture.
  GroundTruth cg;
  std::vector<DetBox> proposals;
  Rng rng(109);
  std::uniform_real_distribution<double> shift(-6.0, 6.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int img = 0; img < 10; ++img) {
    cg.images[img] = {{{0, 0, 20, 20}, 1, true}};
    for (int p = 0; p < 3; ++p) {
      const double dx = shift(rng);
      proposals.push_back({{dx, 0, 20 + dx, 20}, score(rng),
                           BoxSource::Fused, img});
    }
  }
  int correct = 0;
  for (int img = 0; img < 10; ++img) {
    const DetBox* top = nullptr;
    for (const DetBox& p : proposals) {
      if (p.image_id == img && (!top || p.score > top->score)) top = &p;
    }
    if (top && iou(top->rect, cg.images[img][0].rect) > 0.5) correct++;
  }
  c.expect(corloc(proposals, cg) == correct / 10.0, "corloc oracle");

  // ap50 hand case: AP(100) = 5/6, AP(101) = 1.
  GroundTruth ag;
  ag.images[0] = {{{0, 0, 10, 10}, 100, false},
                  {{20, 0, 30, 10}, 100, false},
                  {{40, 0, 50, 10}, 101, false}};
  const std::vector<ClusteredInstance> ap_fix = {
      det({0, 0, 10, 10}, 0.9, 0),      det({200, 200, 210, 210}, 0.8, 0),
      det({20, 0, 30, 10}, 0.7, 0),     det({40, 0, 50, 10}, 0.95, 1),
      det({300, 300, 310, 310}, 0.5, 1), det({40, 0, 50, 10}, 0.3, 1),
  };
  const double ap50 = cluster_ap_at(ap_fix, 2, ag, 0.5);
  c.expect(std::abs(ap50 - (5.0 / 6.0 + 1.0) / 2.0) <= 1e-12, "ap50 fixture");

  // Permutation invariance on 100 random instances.
  std::uniform_real_distribution<double> pos(0.0, 300.0);
  std::uniform_int_distribution<int> cls(100, 104);
  std::uniform_int_distribution<int> clus(0, 7);
  GroundTruth pg;
  std::vector<ClusteredInstance> inst;
  for (int i = 0; i < 100; ++i) {
    const std::int64_t img = i % 5;
    const double x = pos(rng);
    const double y = pos(rng);
    const Rect r{x, y, x + 15, y + 15};
    if (i % 2 == 0) pg.images[img].push_back({r, cls(rng), false});
    inst.push_back({{r, score(rng), BoxSource::Fused, img}, clus(rng)});
  }
  std::vector<int> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<ClusteredInstance> permuted = inst;
  for (ClusteredInstance& ci : permuted) ci.cluster = perm[ci.cluster];
  c.expect(std::abs(purity_coverage_auc(inst, 8, pg, 0.5).auc -
                    purity_coverage_auc(permuted, 8, pg, 0.5).auc) <= 1e-12,
           "auc permutation invariance");
  c.expect(discovered_classes(inst, 8, pg, 0.5) ==
               discovered_classes(permuted, 8, pg, 0.5),
           "discovered permutation invariance");
  c.expect(std::abs(cluster_ap_at(inst, 8, pg, 0.5) -
                    cluster_ap_at(permuted, 8, pg, 0.5)) <= 1e-12,
           "ap permutation invariance");
  return c;
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism.

Check criterion10() {
  Check c;
  auto run = [](const fs::path& dir) {
    RunConfig cfg;
    cfg.seed = 424242;
    cfg.out_dir = dir.string();
    cfg.world.n_images = 120;
    cfg.world.known_classes = 8;
    cfg.world.unknown_classes = 12;
    cfg.world.descriptor_dim = 16;
    cfg.embed.d_in = 16;
    cfg.embed.d_hidden = 16;
    cfg.embed.d_out = 8;
    cfg.embed.epochs = 4;
    cfg.cluster.k_base = 12;
    cfg.cluster.k_over = 60;
    cfg.cluster.max_iters = 100;
    cfg.cluster.init_subset_size = 500;
    stage_generate(cfg);
    stage_fuse(cfg);
    stage_train(cfg);
    stage_cluster(cfg);
    stage_evaluate(cfg);
    stage_report(cfg);
  };
  const fs::path a = fs::temp_directory_path() / "ncdl_acceptance_run_a";
  const fs::path b = fs::temp_directory_path() / "ncdl_acceptance_run_b";
  for (const fs::path& dir : {a, b}) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  run(a);
  run(b);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  int compared = 0;
  for (const fs::directory_entry& entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    c.expect(fs::exists(other),
             "missing in second run: " + entry.path().filename().string());
    if (fs::exists(other)) {
      c.expect(slurp(entry.path()) == slurp(other),
               "differs: " + entry.path().filename().string());
      compared++;
    }
  }
  c.detail << compared << " files compared";
  c.expect(compared >= 10, "too few output files");
  fs::remove_all(a);
  fs::remove_all(b);
  return c;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    Check (*fn)();
  };
  const std::vector<Entry> entries = {
      {1, "nms/iou oracle equivalence", criterion1},
      {2, "score calibration invariance and uniformity", criterion2},
      {3, "fusion beats each stream on its weak side", criterion3},
      {4, "contrastive gradient and loss identities", criterion4},
      {5, "training separates classes", criterion5},
      {6, "clustering analytic and blob-recovery checks", criterion6},
      {7, "minibatch k-means scaling", criterion7},
      {8, "over-clustering improves purity metrics", criterion8},
      {9, "metric oracles and permutation invariance", criterion9},
      {10, "end-to-end determinism", criterion10},
  };
  bool all_ok = true;
  for (const Entry& e : entries) {
    const double t0 = now_s();
    Check c;
    try {
      c = e.fn();
    } catch (const std::exception& ex) {
      c.ok = false;
      c.detail << "exception: " << ex.what();
    }
    const double dt = now_s() - t0;
    std::cout << (c.ok ? "[PASS]" : "[FAIL]") << " criterion " << e.id << ": "
              << e.name << " (" << dt << " s)";
    const std::string detail = c.detail.str();
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << "\n" << std::flush;
    all_ok = all_ok && c.ok;
  }
  return all_ok ? 0 : 1;
}
