#include "ncdl/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ncdl {

void ContrastiveParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("ContrastiveParams: tau <= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("ContrastiveParams: lambda out of [0,1]");
  }
  if (d_in <= 0 || d_hidden <= 0 || d_out <= 0) {
    throw std::invalid_argument("ContrastiveParams: non-positive layer size");
  }
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("ContrastiveParams: negative learning_rate");
  }
  if (epochs < 0 || batch_size <= 0) {
    throw std::invalid_argument("ContrastiveParams: bad epochs/batch_size");
  }
  if (!(augment_noise_sigma >= 0.0)) {
    throw std::invalid_argument("ContrastiveParams: negative noise sigma");
  }
  if (!(augment_dropout_p >= 0.0 && augment_dropout_p < 1.0)) {
    throw std::invalid_argument("ContrastiveParams: dropout_p out of [0,1)");
  }
}

Embedder Embedder::init(const ContrastiveParams& params) {
  params.validate();
  Rng rng(derive_seed(params.seed, 0xE17));
  auto fill = [&rng](Eigen::Ref<Eigen::MatrixXd> m, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
  };
  Embedder e;
  e.w1.resize(params.d_hidden, params.d_in);
  e.b1 = Eigen::VectorXd::Zero(params.d_hidden);
  e.w2.resize(params.d_out, params.d_hidden);
  e.b2 = Eigen::VectorXd::Zero(params.d_out);
  fill(e.w1, params.d_in);
  fill(e.w2, params.d_hidden);
  return e;
}

Eigen::VectorXd Embedder::embed(const Eigen::VectorXd& x) const {
  if (x.size() != w1.cols()) {
    throw std::invalid_argument("Embedder::embed: dimension mismatch");
  }
  const Eigen::VectorXd h = (w1 * x + b1).array().tanh();
  const Eigen::VectorXd u = w2 * h + b2;
  const double norm = u.norm();
  if (norm == 0.0) {
    // All-zero pre-normalization output; fall back to a fixed unit vector.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(u.size());
    z(0) = 1.0;
    return z;
  }
  return u / norm;
}

PatchDescriptor augment(const PatchDescriptor& x, const ContrastiveParams& params,
                        Rng& rng) {
  params.validate();
  PatchDescriptor out = x;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index j = 0; j < out.vector.size(); ++j) {
    if (params.augment_noise_sigma > 0.0) {
      out.vector(j) += params.augment_noise_sigma * noise(rng);
    }
    if (params.augment_dropout_p > 0.0 && unif(rng) < params.augment_dropout_p) {
      out.vector(j) = 0.0;
    }
  }
  return out;
}

namespace {

// log sum_{n != i} exp(s_n / tau), with max subtraction.
double log_denominator(const Eigen::VectorXd& sims_over_tau, int i) {
  double m = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < sims_over_tau.size(); ++n) {
    if (n != i) m = std::max(m, sims_over_tau(n));
  }
  double s = 0.0;
  for (int n = 0; n < sims_over_tau.size(); ++n) {
    if (n != i) s += std::exp(sims_over_tau(n) - m);
  }
  return m + std::log(s);
}

std::vector<int> positive_set(const ViewBatch& batch, int i) {
  std::vector<int> pos;
  if (batch.labels[i] < 0) return pos;
  for (int n = 0; n < batch.size(); ++n) {
    if (n != i && batch.labels[n] == batch.labels[i]) pos.push_back(n);
  }
  return pos;
}

}  // namespace

double unsup_loss(int i, const ViewBatch& batch, double tau) {
  const int m = batch.size();
  if (m < 2 || m % 2 != 0) {
    throw std::invalid_argument("unsup_loss: batch must hold 2N embeddings");
  }
  const Eigen::VectorXd s = batch.z * batch.z.row(i).transpose() / tau;
  return -s(ViewBatch::pair_of(i)) + log_denominator(s, i);
}

double sup_loss(int i, const ViewBatch& batch, double tau) {
  const std::vector<int> pos = positive_set(batch, i);
  if (pos.empty()) return 0.0;  // labeled sample with no positive in batch
  const Eigen::VectorXd s = batch.z * batch.z.row(i).transpose() / tau;
  const double log_den = log_denominator(s, i);
  double acc = 0.0;
  for (int q : pos) acc += -s(q) + log_den;
  return acc / static_cast<double>(pos.size());
}

double total_loss(const ViewBatch& batch, const ContrastiveParams& params) {
  params.validate();
  double loss = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    if (params.lambda < 1.0) {
      loss += (1.0 - params.lambda) * unsup_loss(i, batch, params.tau);
    }
    if (params.lambda > 0.0 && batch.labels[i] >= 0) {
      loss += params.lambda * sup_loss(i, batch, params.tau);
    }
  }
  return loss;
}

Eigen::MatrixXd total_loss_grad_z(const ViewBatch& batch,
                                  const ContrastiveParams& params) {
  params.validate();
  const int m = batch.size();
  const double tau = params.tau;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(m, batch.z.cols());

  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd s = batch.z * batch.z.row(i).transpose() / tau;
    // softmax over n != i
    double mx = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < m; ++n) {
      if (n != i) mx = std::max(mx, s(n));
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    double den = 0.0;
    for (int n = 0; n < m; ++n) {
      if (n != i) {
        w(n) = std::exp(s(n) - mx);
        den += w(n);
      }
    }
    w /= den;
    const Eigen::RowVectorXd softmax_combo = w.transpose() * batch.z;

    const double wu = 1.0 - params.lambda;
    if (wu > 0.0) {
      const int p = ViewBatch::pair_of(i);
      grad.row(i) += wu / tau * (softmax_combo - batch.z.row(p));
      for (int n = 0; n < m; ++n) {
        if (n == i) continue;
        const double coeff = w(n) - (n == p ? 1.0 : 0.0);
        grad.row(n) += wu / tau * coeff * batch.z.row(i);
      }
    }

    if (params.lambda > 0.0 && batch.labels[i] >= 0) {
      const std::vector<int> pos = positive_set(batch, i);
      if (!pos.empty()) {
        const double inv_p = 1.0 / static_cast<double>(pos.size());
        Eigen::RowVectorXd pos_mean =
            Eigen::RowVectorXd::Zero(batch.z.cols());
        for (int q : pos) pos_mean += batch.z.row(q);
        pos_mean *= inv_p;
        grad.row(i) += params.lambda / tau * (softmax_combo - pos_mean);
        for (int n = 0; n < m; ++n) {
          if (n == i) continue;
          double coeff = w(n);
          if (batch.labels[n] == batch.labels[i]) coeff -= inv_p;
          grad.row(n) += params.lambda / tau * coeff * batch.z.row(i);
        }
      }
    }
  }
  return grad;
}

EmbedderGrad loss_gradient(const Embedder& model,
                           const std::vector<Eigen::VectorXd>& views,
                           const std::vector<int>& labels,
                           const ContrastiveParams& params) {
  params.validate();
  const int m = static_cast<int>(views.size());
  if (m < 2 || m % 2 != 0 || labels.size() != views.size()) {
    throw std::invalid_argument("loss_gradient: malformed view batch");
  }

  // Forward pass with caches.
  std::vector<Eigen::VectorXd> hs(m), us(m);
  std::vector<double> norms(m);
  ViewBatch batch;
  batch.z.resize(m, model.w2.rows());
  batch.labels = labels;
  for (int j = 0; j < m; ++j) {
    hs[j] = (model.w1 * views[j] + model.b1).array().tanh();
    us[j] = model.w2 * hs[j] + model.b2;
    norms[j] = us[j].norm();
    if (norms[j] == 0.0) {
      throw std::runtime_error("loss_gradient: zero pre-normalization output");
    }
    batch.z.row(j) = (us[j] / norms[j]).transpose();
  }

  EmbedderGrad g;
  g.loss = total_loss(batch, params);
  g.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(model.b1.size());
  g.w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
  g.b2 = Eigen::VectorXd::Zero(model.b2.size());

  const Eigen::MatrixXd dz = total_loss_grad_z(batch, params);
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd z = batch.z.row(j).transpose();
    const Eigen::VectorXd gz = dz.row(j).transpose();
    // Through z = u / ||u||.
    const Eigen::VectorXd du = (gz - z * z.dot(gz)) / norms[j];
    g.w2 += du * hs[j].transpose();
    g.b2 += du;
    const Eigen::VectorXd dh = model.w2.transpose() * du;
    const Eigen::VectorXd da =
        dh.array() * (1.0 - hs[j].array() * hs[j].array());
    g.w1 += da * views[j].transpose();
    g.b1 += da;
  }
  return g;
}

TrainResult train_embedder(const std::vector<PatchDescriptor>& data,
                           const ContrastiveParams& params) {
  params.validate();
  if (data.empty()) throw std::invalid_argument("train_embedder: empty dataset");
  for (const auto& d : data) {
    if (d.vector.size() != params.d_in) {
      throw std::invalid_argument("train_embedder: descriptor dim mismatch");
    }
  }

  TrainResult result;
  result.model = Embedder::init(params);
  const int n = static_cast<int>(data.size());

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    Rng rng(derive_seed(params.seed, 0x1000 + static_cast<std::uint64_t>(epoch)));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    double loss_sum = 0.0;
    int view_count = 0;
    for (int start = 0; start < n; start += params.batch_size) {
      const int count = std::min(params.batch_size, n - start);
      std::vector<Eigen::VectorXd> views;
      std::vector<int> labels;
      views.reserve(2 * count);
      labels.reserve(2 * count);
      for (int t = 0; t < count; ++t) {
        const PatchDescriptor& src = data[perm[start + t]];
        for (int v = 0; v < 2; ++v) {
          views.push_back(augment(src, params, rng).vector);
          labels.push_back(src.label);
        }
      }
      const EmbedderGrad g =
          loss_gradient(result.model, views, labels, params);
      result.model.w1 -= params.learning_rate * g.w1;
      result.model.b1 -= params.learning_rate * g.b1;
      result.model.w2 -= params.learning_rate * g.w2;
      result.model.b2 -= params.learning_rate * g.b2;
      loss_sum += g.loss;
      view_count += static_cast<int>(views.size());
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(view_count));
  }
  return result;
}

}  // namespace ncdl
