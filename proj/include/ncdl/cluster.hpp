#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace ncdl {

struct ClusterParams {
  int k = 8;
  int batch_size = 256;
  int max_iters = 100;  // Lloyd iterations (full) or batches (minibatch)
  int init_subset_size = 10000;
  double tol = 1e-4;  // stop when max center movement drops below this
  std::uint64_t seed = 0;
};

struct Clustering {
  Eigen::MatrixXd centers;      // k x d
  std::vector<int> assignments; // per instance, in [0, k)
  double inertia = 0.0;         // sum of squared distances to assigned centers
};

// Lloyd iterations from k-means++ seeding. Deterministic given seed.
Clustering kmeans_full(const Eigen::MatrixXd& X, const ClusterParams& params);

// Mini-batch k-means: seed centers with kmeans_full on a random subset of
// init_subset_size instances, then stream batches with per-center 1/n_c
// decaying updates; final assignments from one full nearest-center pass.
Clustering kmeans_minibatch(const Eigen::MatrixXd& X,
                            const ClusterParams& params);

// Coarse and over-clustered partitions of the same instances, with
// deterministically split seed streams. Requires k_base < k_over <= |X|.
std::pair<Clustering, Clustering> overcluster_pair(const Eigen::MatrixXd& X,
                                                   int k_base, int k_over,
                                                   const ClusterParams& params);

}  // namespace ncdl
