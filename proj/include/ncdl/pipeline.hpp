#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ncdl/cluster.hpp"
#include "ncdl/drm.hpp"
#include "ncdl/embed.hpp"
#include "ncdl/metrics.hpp"
#include "ncdl/synth.hpp"

namespace ncdl {

struct ClusterStageConfig {
  int k_base = 60;
  int k_over = 300;
  int batch_size = 256;
  int max_iters = 300;
  int init_subset_size = 10000;
  double tol = 1e-4;
};

struct MetricsConfig {
  std::vector<double> auc_ious = {0.5, 0.2};
  double purity_min = 0.5;
  double corloc_iou = 0.5;
};

// Full run configuration; all stage randomness is split from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  WorldConfig world = WorldConfig::defaults();
  DrmParams drm;
  ContrastiveParams embed;
  ClusterStageConfig cluster;
  MetricsConfig metrics;
  double patch_match_iou = 0.3;    // box-to-gt overlap for patch descriptors
  double patch_noise_sigma = 0.05;
};

// Loads config from a JSON document; missing fields keep their defaults.
RunConfig load_config(const std::string& path);
RunConfig config_from_json_text(const std::string& text);

// Output file locations within config.out_dir.
struct StagePaths {
  std::string gt, proposals_aware, proposals_agnostic, descriptors,
      descriptors_index, proposals_fused, fused_descriptors, fused_index,
      embedder, loss_trace, assignments_base, assignments_over, centers_base,
      centers_over, eval_report, curves_base, curves_over, report, bench;
};
StagePaths stage_paths(const RunConfig& config);

void stage_generate(const RunConfig& config);
void stage_fuse(const RunConfig& config);
void stage_train(const RunConfig& config);
void stage_cluster(const RunConfig& config);

// Returns (base clustering report, over clustering report); also writes
// eval_report.json and the curve CSVs.
std::pair<EvalReport, EvalReport> stage_evaluate(const RunConfig& config);

// Table-shaped CSV comparing {aware, agnostic, fused} x {k_base, k_over}.
void stage_report(const RunConfig& config);

struct BenchRow {
  std::string method;  // "kmeans_full" or "kmeans_minibatch"
  int k = 0;
  int n = 0;
  double seconds = 0.0;
  double inertia = 0.0;
};

// Wall-clock comparison of full vs mini-batch k-means on synthetic features.
std::vector<BenchRow> bench_cluster(const std::vector<int>& sample_sizes,
                                    const std::vector<int>& cluster_counts,
                                    int dim, std::uint64_t seed);
void stage_bench(const RunConfig& config, const std::vector<int>& sample_sizes,
                 const std::vector<int>& cluster_counts, int dim);

}  // namespace ncdl
