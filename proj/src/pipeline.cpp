#include "ncdl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "ncdl/io.hpp"
#include "ncdl/rng.hpp"

namespace ncdl {
namespace {

using json = nlohmann::ordered_json;

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_profile(const json& j, DetectorProfile& p) {
  get_if_present(j, "recall_known", p.recall_known);
  get_if_present(j, "recall_unknown", p.recall_unknown);
  get_if_present(j, "localization_jitter_sigma", p.localization_jitter_sigma);
  get_if_present(j, "score_mean", p.score_mean);
  get_if_present(j, "score_spread", p.score_spread);
  get_if_present(j, "false_positives_per_image", p.false_positives_per_image);
  get_if_present(j, "fp_score_mean", p.fp_score_mean);
  get_if_present(j, "fp_score_spread", p.fp_score_spread);
  get_if_present(j, "misclassify_unknown_as_known",
                 p.misclassify_unknown_as_known);
}

std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return buf;
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  RunConfig cfg;
  get_if_present(j, "seed", cfg.seed);
  get_if_present(j, "out_dir", cfg.out_dir);
  get_if_present(j, "patch_match_iou", cfg.patch_match_iou);
  get_if_present(j, "patch_noise_sigma", cfg.patch_noise_sigma);
  if (j.contains("world")) {
    const json& w = j.at("world");
    get_if_present(w, "n_images", cfg.world.n_images);
    get_if_present(w, "known_classes", cfg.world.known_classes);
    get_if_present(w, "unknown_classes", cfg.world.unknown_classes);
    get_if_present(w, "objects_min", cfg.world.objects_min);
    get_if_present(w, "objects_max", cfg.world.objects_max);
    get_if_present(w, "canvas_w", cfg.world.canvas_w);
    get_if_present(w, "canvas_h", cfg.world.canvas_h);
    get_if_present(w, "descriptor_dim", cfg.world.descriptor_dim);
    get_if_present(w, "class_mean_separation", cfg.world.class_mean_separation);
    get_if_present(w, "descriptor_noise_sigma",
                   cfg.world.descriptor_noise_sigma);
    if (w.contains("aware")) parse_profile(w.at("aware"), cfg.world.aware);
    if (w.contains("agnostic")) parse_profile(w.at("agnostic"), cfg.world.agnostic);
  }
  if (j.contains("drm")) {
    const json& d = j.at("drm");
    get_if_present(d, "alpha1", cfg.drm.alpha1);
    get_if_present(d, "beta1", cfg.drm.beta1);
    get_if_present(d, "alpha2", cfg.drm.alpha2);
    get_if_present(d, "beta2", cfg.drm.beta2);
    get_if_present(d, "nms_iou", cfg.drm.nms_iou);
  }
  if (j.contains("embed")) {
    const json& e = j.at("embed");
    get_if_present(e, "tau", cfg.embed.tau);
    get_if_present(e, "lambda", cfg.embed.lambda);
    get_if_present(e, "d_hidden", cfg.embed.d_hidden);
    get_if_present(e, "d_out", cfg.embed.d_out);
    get_if_present(e, "learning_rate", cfg.embed.learning_rate);
    get_if_present(e, "epochs", cfg.embed.epochs);
    get_if_present(e, "batch_size", cfg.embed.batch_size);
    get_if_present(e, "augment_noise_sigma", cfg.embed.augment_noise_sigma);
    get_if_present(e, "augment_dropout_p", cfg.embed.augment_dropout_p);
  }
  if (j.contains("cluster")) {
    const json& c = j.at("cluster");
    get_if_present(c, "k_base", cfg.cluster.k_base);
    get_if_present(c, "k_over", cfg.cluster.k_over);
    get_if_present(c, "batch_size", cfg.cluster.batch_size);
    get_if_present(c, "max_iters", cfg.cluster.max_iters);
    get_if_present(c, "init_subset_size", cfg.cluster.init_subset_size);
    get_if_present(c, "tol", cfg.cluster.tol);
  }
  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    get_if_present(m, "auc_ious", cfg.metrics.auc_ious);
    get_if_present(m, "purity_min", cfg.metrics.purity_min);
    get_if_present(m, "corloc_iou", cfg.metrics.corloc_iou);
  }
  cfg.embed.d_in = cfg.world.descriptor_dim;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

StagePaths stage_paths(const RunConfig& config) {
  const std::string d = config.out_dir + "/";
  StagePaths p;
  p.gt = d + "gt.jsonl";
  p.proposals_aware = d + "proposals_aware.jsonl";
  p.proposals_agnostic = d + "proposals_agnostic.jsonl";
  p.descriptors = d + "descriptors.bin";
  p.descriptors_index = d + "descriptors_index.jsonl";
  p.proposals_fused = d + "proposals_fused.jsonl";
  p.fused_descriptors = d + "fused_descriptors.bin";
  p.fused_index = d + "fused_index.jsonl";
  p.embedder = d + "embedder.bin";
  p.loss_trace = d + "loss_trace.csv";
  p.assignments_base = d + "assignments_base.jsonl";
  p.assignments_over = d + "assignments_over.jsonl";
  p.centers_base = d + "centers_base.bin";
  p.centers_over = d + "centers_over.bin";
  p.eval_report = d + "eval_report.json";
  p.curves_base = d + "curves_base.csv";
  p.curves_over = d + "curves_over.csv";
  p.report = d + "report.csv";
  p.bench = d + "bench.csv";
  return p;
}

namespace {

std::vector<GtObject> objects_from_index(
    const std::vector<io::InstanceRecord>& records) {
  std::vector<GtObject> objects;
  objects.reserve(records.size());
  for (const io::InstanceRecord& r : records) {
    objects.push_back({r.image_id, r.rect, r.class_id, r.known});
  }
  return objects;
}

Eigen::MatrixXd embed_rows(const Embedder& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z(X.rows(), model.w2.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Z.row(i) = model.embed(X.row(i).transpose()).transpose();
  }
  return Z;
}

struct EvalInputs {
  GroundTruth gt;
  std::vector<DetBox> proposals;
  std::vector<ClusteredInstance> base_instances;
  std::vector<ClusteredInstance> over_instances;
};

EvalReport evaluate_clustering(const std::vector<ClusteredInstance>& instances,
                               int k, const GroundTruth& gt,
                               const std::vector<DetBox>& proposals,
                               const MetricsConfig& mc) {
  EvalReport report;
  report.corloc = corloc(proposals, gt, mc.corloc_iou);
  for (double t : mc.auc_ious) {
    PurityCurve curve = purity_coverage_auc(instances, k, gt, t);
    report.auc[t] = curve.auc;
    report.curves[t] = std::move(curve);
  }
  report.discovered_classes =
      discovered_classes(instances, k, gt, 0.5, mc.purity_min);
  std::tie(report.ap, report.ap50) = cluster_map(instances, k, gt);
  return report;
}

void write_curves_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "threshold,coverage,purity\n";
  for (const auto& [t, curve] : report.curves) {
    for (const auto& [coverage, purity] : curve.points) {
      out << format_threshold(t) << "," << coverage << "," << purity << "\n";
    }
  }
}

json report_to_json(const EvalReport& r, int k) {
  json j;
  j["k"] = k;
  for (const auto& [t, v] : r.auc) j["auc"][format_threshold(t)] = v;
  j["discovered_classes"] = r.discovered_classes;
  j["ap"] = r.ap;
  j["ap50"] = r.ap50;
  return j;
}

}  // namespace

void stage_generate(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  const StagePaths paths = stage_paths(config);

  WorldConfig wc = config.world;
  wc.seed = derive_seed(config.seed, 10);
  const World world = generate_world(wc);

  const ProposalSet aware = simulate_detector(
      world, wc.aware, BoxSource::ClassAware, 1, derive_seed(config.seed, 11));
  const ProposalSet agnostic =
      simulate_detector(world, wc.agnostic, BoxSource::ClassAgnostic, 2,
                        derive_seed(config.seed, 12));

  io::write_gt(paths.gt, world.gt);
  io::write_proposals(paths.proposals_aware, aware.boxes);
  io::write_proposals(paths.proposals_agnostic, agnostic.boxes);
  io::write_descriptors(paths.descriptors, world.descriptors);

  std::vector<io::InstanceRecord> records;
  for (std::size_t i = 0; i < world.objects.size(); ++i) {
    const GtObject& o = world.objects[i];
    records.push_back({static_cast<std::int64_t>(i), o.image_id, o.rect,
                       o.class_id, o.known});
  }
  io::write_instance_index(paths.descriptors_index, records);
}

void stage_fuse(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  ProposalSet aware{io::read_proposals(paths.proposals_aware), 1};
  ProposalSet agnostic{io::read_proposals(paths.proposals_agnostic), 2};
  const std::vector<DetBox> fused =
      debiased_region_mining(aware, agnostic, config.drm);
  io::write_proposals(paths.proposals_fused, fused);

  const std::vector<io::InstanceRecord> records =
      io::read_instance_index(paths.descriptors_index);
  const Eigen::MatrixXd gt_descriptors =
      io::read_descriptors(paths.descriptors);
  const Eigen::MatrixXd fused_descriptors = descriptors_for_boxes(
      objects_from_index(records), gt_descriptors, fused, config.patch_match_iou,
      config.patch_noise_sigma, derive_seed(config.seed, 13));
  io::write_descriptors(paths.fused_descriptors, fused_descriptors);

  std::vector<io::InstanceRecord> fused_records;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    fused_records.push_back({static_cast<std::int64_t>(i), fused[i].image_id,
                             fused[i].rect, -1, false});
  }
  io::write_instance_index(paths.fused_index, fused_records);
}

void stage_train(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  const std::vector<io::InstanceRecord> gt_records =
      io::read_instance_index(paths.descriptors_index);
  const Eigen::MatrixXd gt_descriptors =
      io::read_descriptors(paths.descriptors);
  const Eigen::MatrixXd fused_descriptors =
      io::read_descriptors(paths.fused_descriptors);

  // Labeled set: ground-truth patches of known classes. Unlabeled set: the
  // fused proposals.
  std::vector<PatchDescriptor> data;
  for (std::size_t i = 0; i < gt_records.size(); ++i) {
    if (!gt_records[i].known) continue;
    data.push_back({gt_descriptors.row(static_cast<Eigen::Index>(i)).transpose(),
                    gt_records[i].class_id});
  }
  for (Eigen::Index i = 0; i < fused_descriptors.rows(); ++i) {
    data.push_back({fused_descriptors.row(i).transpose(), -1});
  }

  ContrastiveParams params = config.embed;
  params.d_in = static_cast<int>(gt_descriptors.cols());
  params.seed = derive_seed(config.seed, 14);
  const TrainResult result = train_embedder(data, params);

  io::write_embedder(paths.embedder, result.model, params.seed);
  std::ofstream trace(paths.loss_trace);
  if (!trace) throw std::runtime_error("cannot write " + paths.loss_trace);
  trace << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    trace << e + 1 << "," << result.epoch_loss[e] << "\n";
  }
}

void stage_cluster(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  const Eigen::MatrixXd fused_descriptors =
      io::read_descriptors(paths.fused_descriptors);
  const Embedder model = io::read_embedder(paths.embedder);
  const Eigen::MatrixXd Z = embed_rows(model, fused_descriptors);

  ClusterParams params;
  params.batch_size = config.cluster.batch_size;
  params.max_iters = config.cluster.max_iters;
  params.init_subset_size = config.cluster.init_subset_size;
  params.tol = config.cluster.tol;
  params.seed = derive_seed(config.seed, 15);
  const auto [base, over] =
      overcluster_pair(Z, config.cluster.k_base, config.cluster.k_over, params);

  io::write_assignments(paths.assignments_base, base.assignments);
  io::write_assignments(paths.assignments_over, over.assignments);
  io::write_descriptors(paths.centers_base, base.centers);
  io::write_descriptors(paths.centers_over, over.centers);
}

std::pair<EvalReport, EvalReport> stage_evaluate(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  const GroundTruth gt = io::read_gt(paths.gt);
  const std::vector<DetBox> fused = io::read_proposals(paths.proposals_fused);
  const std::vector<int> base_assign =
      io::read_assignments(paths.assignments_base);
  const std::vector<int> over_assign =
      io::read_assignments(paths.assignments_over);
  if (base_assign.size() != fused.size() || over_assign.size() != fused.size()) {
    throw std::runtime_error("stage_evaluate: assignment/proposal count mismatch");
  }

  auto make_instances = [&](const std::vector<int>& assign) {
    std::vector<ClusteredInstance> instances;
    for (std::size_t i = 0; i < fused.size(); ++i) {
      instances.push_back({fused[i], assign[i]});
    }
    return instances;
  };

  const EvalReport base =
      evaluate_clustering(make_instances(base_assign), config.cluster.k_base,
                          gt, fused, config.metrics);
  const EvalReport over =
      evaluate_clustering(make_instances(over_assign), config.cluster.k_over,
                          gt, fused, config.metrics);

  json j;
  j["corloc"] = base.corloc;
  j["base"] = report_to_json(base, config.cluster.k_base);
  j["over"] = report_to_json(over, config.cluster.k_over);
  std::ofstream out(paths.eval_report);
  if (!out) throw std::runtime_error("cannot write " + paths.eval_report);
  out << j.dump(2) << "\n";

  write_curves_csv(paths.curves_base, base);
  write_curves_csv(paths.curves_over, over);
  return {base, over};
}

void stage_report(const RunConfig& config) {
  const StagePaths paths = stage_paths(config);
  const GroundTruth gt = io::read_gt(paths.gt);
  ProposalSet aware{io::read_proposals(paths.proposals_aware), 1};
  ProposalSet agnostic{io::read_proposals(paths.proposals_agnostic), 2};
  const std::vector<io::InstanceRecord> gt_records =
      io::read_instance_index(paths.descriptors_index);
  const Eigen::MatrixXd gt_descriptors =
      io::read_descriptors(paths.descriptors);
  const std::vector<GtObject> objects = objects_from_index(gt_records);
  const Embedder model = io::read_embedder(paths.embedder);

  std::ofstream out(paths.report);
  if (!out) throw std::runtime_error("cannot write " + paths.report);
  out << "variant,k,auc@0.5,auc@0.2,disc_cls,corloc,ap,ap50\n";

  const ProposalSet empty_b{{}, 2};
  const ProposalSet empty_a{{}, 1};
  const std::vector<std::pair<std::string, std::vector<DetBox>>> variants = {
      {"aware", debiased_region_mining(aware, empty_b, config.drm)},
      {"agnostic", debiased_region_mining(empty_a, agnostic, config.drm)},
      {"fused", debiased_region_mining(aware, agnostic, config.drm)},
  };

  int variant_idx = 0;
  for (const auto& [name, boxes] : variants) {
    const Eigen::MatrixXd descriptors = descriptors_for_boxes(
        objects, gt_descriptors, boxes, config.patch_match_iou,
        config.patch_noise_sigma, derive_seed(config.seed, 20 + variant_idx));
    const Eigen::MatrixXd Z = embed_rows(model, descriptors);

    ClusterParams params;
    params.batch_size = config.cluster.batch_size;
    params.max_iters = config.cluster.max_iters;
    params.init_subset_size = config.cluster.init_subset_size;
    params.tol = config.cluster.tol;
    params.seed = derive_seed(config.seed, 30 + variant_idx);
    const auto [base, over] =
        overcluster_pair(Z, config.cluster.k_base, config.cluster.k_over, params);

    for (const auto& [k, clustering] :
         {std::pair<int, const Clustering*>{config.cluster.k_base, &base},
          {config.cluster.k_over, &over}}) {
      std::vector<ClusteredInstance> instances;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        instances.push_back({boxes[i], clustering->assignments[i]});
      }
      const EvalReport r =
          evaluate_clustering(instances, k, gt, boxes, config.metrics);
      out << name << "," << k;
      for (double t : {0.5, 0.2}) {
        const auto it = r.auc.find(t);
        out << "," << (it != r.auc.end() ? it->second : 0.0);
      }
      out << "," << r.discovered_classes << "," << r.corloc << "," << r.ap
          << "," << r.ap50 << "\n";
    }
    ++variant_idx;
  }
}

std::vector<BenchRow> bench_cluster(const std::vector<int>& sample_sizes,
                                    const std::vector<int>& cluster_counts,
                                    int dim, std::uint64_t seed) {
  std::vector<BenchRow> rows;
  const int n_max = *std::max_element(sample_sizes.begin(), sample_sizes.end());
  Rng rng(derive_seed(seed, 0xBE7C));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(n_max, dim);
  for (int i = 0; i < n_max; ++i) {
    for (int j = 0; j < dim; ++j) X(i, j) = gauss(rng);
  }

  auto timed = [](auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    Clustering c = fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::pair<double, double>{
        std::chrono::duration<double>(stop - start).count(), c.inertia};
  };

  for (int k : cluster_counts) {
    for (int n : sample_sizes) {
      const auto Xn = X.topRows(n);
      ClusterParams full;
      full.k = k;
      full.max_iters = 100;  // tol-guarded; large k rarely converges sooner
      full.tol = 1e-4;
      full.seed = derive_seed(seed, 0xF0);
      const auto [t_full, inertia_full] =
          timed([&] { return kmeans_full(Xn, full); });
      rows.push_back({"kmeans_full", k, n, t_full, inertia_full});

      ClusterParams mb;
      mb.k = k;
      mb.batch_size = 256;
      mb.max_iters = 200;
      mb.init_subset_size = 10000;
      mb.tol = 0.0;  // fixed batch count so timings compare equal work
      mb.seed = derive_seed(seed, 0xF1);
      const auto [t_mb, inertia_mb] =
          timed([&] { return kmeans_minibatch(Xn, mb); });
      rows.push_back({"kmeans_minibatch", k, n, t_mb, inertia_mb});
    }
  }
  return rows;
}

void stage_bench(const RunConfig& config, const std::vector<int>& sample_sizes,
                 const std::vector<int>& cluster_counts, int dim) {
  std::filesystem::create_directories(config.out_dir);
  const StagePaths paths = stage_paths(config);
  const std::vector<BenchRow> rows =
      bench_cluster(sample_sizes, cluster_counts, dim, config.seed);
  std::ofstream out(paths.bench);
  if (!out) throw std::runtime_error("cannot write " + paths.bench);
  out << "method,k,sample_size,time_s,inertia\n";
  for (const BenchRow& r : rows) {
    out << r.method << "," << r.k << "," << r.n << "," << r.seconds << ","
        << r.inertia << "\n";
  }
}

}  // namespace ncdl
