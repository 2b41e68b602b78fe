#include "ncdl/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ncdl/rng.hpp"

namespace ncdl {
namespace {

void validate(const Eigen::MatrixXd& X, const ClusterParams& params) {
  if (X.rows() == 0) throw std::invalid_argument("kmeans: empty instance matrix");
  if (params.k <= 0 || params.k > X.rows()) {
    throw std::invalid_argument("kmeans: k out of [1, |X|]");
  }
  if (params.batch_size < 1) throw std::invalid_argument("kmeans: batch_size < 1");
  if (params.max_iters < 0) throw std::invalid_argument("kmeans: max_iters < 0");
  if (params.tol < 0.0) throw std::invalid_argument("kmeans: tol < 0");
}

// Nearest-center assignment, blocked so the distance matrix stays small.
void assign_nearest(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centers,
                    std::vector<int>& assignments, std::vector<double>& sq_dists) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = centers.rows();
  assignments.resize(n);
  sq_dists.resize(n);
  const Eigen::VectorXd c_norms = centers.rowwise().squaredNorm();
  constexpr Eigen::Index kBlock = 4096;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    const auto Xb = X.middleRows(start, rows);
    const Eigen::VectorXd x_norms = Xb.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (Xb * centers.transpose());
    d2.colwise() += x_norms;
    d2.rowwise() += c_norms.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index best = 0;
      const double best_d = d2.row(i).minCoeff(&best);
      assignments[start + i] = static_cast<int>(best);
      sq_dists[start + i] = std::max(0.0, best_d);
    }
  }
}

// k-means++ seeding: next center sampled proportionally to squared distance
// from the nearest already-chosen center.
Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centers(k, X.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = X.row(first(rng));

  Eigen::VectorXd d2 =
      (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = unif(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining mass zero (duplicate points); fall back to index order.
      pick = c % n;
    }
    centers.row(c) = X.row(pick);
    d2 = d2.cwiseMin(
        (X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

Clustering kmeans_full(const Eigen::MatrixXd& X, const ClusterParams& params) {
  validate(X, params);
  const Eigen::Index n = X.rows();
  const int k = params.k;

  Rng rng(derive_seed(params.seed, 0xF011));
  Eigen::MatrixXd centers = seed_centers(X, k, rng);

  std::vector<int> assignments;
  std::vector<double> sq_dists;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    assign_nearest(X, centers, assignments, sq_dists);

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignments[i]) += X.row(i);
      counts[assignments[i]]++;
    }
    Eigen::MatrixXd next = centers;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Dead center: move it onto the point farthest from its own center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (sq_dists[i] > far_d) {
            far_d = sq_dists[i];
            far = i;
          }
        }
        next.row(c) = X.row(far);
        sq_dists[far] = 0.0;
      }
    }
    const double movement = (next - centers).rowwise().norm().maxCoeff();
    centers = next;
    if (movement < params.tol) break;
  }

  Clustering result;
  result.centers = centers;
  assign_nearest(X, centers, result.assignments, sq_dists);
  result.inertia = std::accumulate(sq_dists.begin(), sq_dists.end(), 0.0);
  return result;
}

Clustering kmeans_minibatch(const Eigen::MatrixXd& X,
                            const ClusterParams& params) {
  validate(X, params);
  const Eigen::Index n = X.rows();
  const int k = params.k;
  Rng rng(derive_seed(params.seed, 0xF022));

  // Step 1: seed centers with full k-means on a random subset.
  const Eigen::Index subset_n =
      std::min<Eigen::Index>(n, std::max<Eigen::Index>(params.init_subset_size, k));
  Eigen::MatrixXd centers;
  {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Eigen::Index> chosen;
    chosen.reserve(subset_n);
    std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), subset_n, rng);
    Eigen::MatrixXd subset(subset_n, X.cols());
    for (Eigen::Index i = 0; i < subset_n; ++i) subset.row(i) = X.row(chosen[i]);
    ClusterParams init_params = params;
    init_params.max_iters = 10;  // coarse centers are enough for seeding
    init_params.seed = derive_seed(params.seed, 0xF023);
    centers = kmeans_full(subset, init_params).centers;
  }

  // Steps 2-3: stream batches; per-center step size decays as 1/n_c.
  std::vector<std::int64_t> counts(k, 0);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::MatrixXd batch(params.batch_size, X.cols());
  std::vector<int> batch_assign;
  std::vector<double> batch_d2;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    for (int b = 0; b < params.batch_size; ++b) batch.row(b) = X.row(pick(rng));
    assign_nearest(batch, centers, batch_assign, batch_d2);
    const Eigen::MatrixXd before = centers;
    // Sequential update in a fixed sample order keeps runs deterministic.
    for (int b = 0; b < params.batch_size; ++b) {
      const int c = batch_assign[b];
      counts[c]++;
      const double eta = 1.0 / static_cast<double>(counts[c]);
      centers.row(c) += eta * (batch.row(b) - centers.row(c));
    }
    const double movement = (centers - before).rowwise().norm().maxCoeff();
    if (movement < params.tol) break;  // step 4
  }

  Clustering result;
  result.centers = centers;
  std::vector<double> sq_dists;
  assign_nearest(X, centers, result.assignments, sq_dists);
  result.inertia = std::accumulate(sq_dists.begin(), sq_dists.end(), 0.0);
  return result;
}

std::pair<Clustering, Clustering> overcluster_pair(const Eigen::MatrixXd& X,
                                                   int k_base, int k_over,
                                                   const ClusterParams& params) {
  if (!(k_base < k_over && k_over <= X.rows())) {
    throw std::invalid_argument("overcluster_pair: need k_base < k_over <= |X|");
  }
  ClusterParams base = params;
  base.k = k_base;
  base.seed = derive_seed(params.seed, 1);
  ClusterParams over = params;
  over.k = k_over;
  over.seed = derive_seed(params.seed, 2);
  return {kmeans_minibatch(X, base), kmeans_minibatch(X, over)};
}

}  // namespace ncdl
