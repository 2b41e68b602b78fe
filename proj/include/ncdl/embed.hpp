#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ncdl/rng.hpp"

namespace ncdl {

// Descriptor vector for one patch. label < 0 means unlabeled.
struct PatchDescriptor {
  Eigen::VectorXd vector;
  int label = -1;
};

struct ContrastiveParams {
  double tau = 0.2;     // temperature
  double lambda = 0.5;  // supervised weight in [0,1]
  int d_in = 32;
  int d_hidden = 32;
  int d_out = 16;
  double learning_rate = 0.05;
  int epochs = 20;
  int batch_size = 64;
  double augment_noise_sigma = 0.05;
  double augment_dropout_p = 0.0;  // in [0,1)
  std::uint64_t seed = 0;

  void validate() const;
};

// Two-layer perceptron d_in -> d_hidden (tanh) -> d_out, followed by L2
// normalization, so every output is a unit vector.
struct Embedder {
  Eigen::MatrixXd w1;  // d_hidden x d_in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // d_out x d_hidden
  Eigen::VectorXd b2;

  static Embedder init(const ContrastiveParams& params);
  Eigen::VectorXd embed(const Eigen::VectorXd& x) const;
};

// Gaussian noise plus independent coordinate dropout; label preserved.
PatchDescriptor augment(const PatchDescriptor& x, const ContrastiveParams& params,
                        Rng& rng);

// A batch of 2N embeddings, two views per patch. View i pairs with i^1
// (views of patch k occupy rows 2k and 2k+1). labels[i] < 0 = unlabeled.
struct ViewBatch {
  Eigen::MatrixXd z;        // 2N x d_out, rows unit-norm
  std::vector<int> labels;  // size 2N

  int size() const { return static_cast<int>(z.rows()); }
  static int pair_of(int i) { return i ^ 1; }
};

double unsup_loss(int i, const ViewBatch& batch, double tau);
double sup_loss(int i, const ViewBatch& batch, double tau);

// (1-lambda) * sum_i L_u(i) + lambda * sum_{labeled i} L_s(i).
double total_loss(const ViewBatch& batch, const ContrastiveParams& params);

// Gradient of total_loss with respect to the embedding rows.
Eigen::MatrixXd total_loss_grad_z(const ViewBatch& batch,
                                  const ContrastiveParams& params);

struct EmbedderGrad {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  double loss = 0.0;
};

// Analytic gradient of total_loss w.r.t. all embedder parameters, through
// the L2 normalization. `views` are the 2N already-augmented inputs in
// batch order; labels follow ViewBatch conventions.
EmbedderGrad loss_gradient(const Embedder& model,
                           const std::vector<Eigen::VectorXd>& views,
                           const std::vector<int>& labels,
                           const ContrastiveParams& params);

struct TrainResult {
  Embedder model;
  std::vector<double> epoch_loss;  // mean per-view total loss per epoch
};

// Mini-batch gradient descent; fully deterministic given params.seed.
TrainResult train_embedder(const std::vector<PatchDescriptor>& data,
                           const ContrastiveParams& params);

}  // namespace ncdl
