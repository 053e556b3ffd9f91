#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphedit/edge_predictor.hpp"  // detail::glorot, detail::AdamState
#include "graphedit/graph.hpp"

namespace graphedit {

/// Two-layer parameters, shared between the GCN and the MLP baseline.
struct GcnParams {
  Eigen::MatrixXd W0;  // in_dim x hidden
  Eigen::MatrixXd W1;  // hidden x num_classes
  Eigen::VectorXd b0;
  Eigen::VectorXd b1;
};

inline GcnParams init_gcn_params(int in_dim, int hidden, int num_classes,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GcnParams p;
  p.W0 = detail::glorot(in_dim, hidden, rng);
  p.W1 = detail::glorot(hidden, num_classes, rng);
  p.b0 = Eigen::VectorXd::Zero(hidden);
  p.b1 = Eigen::VectorXd::Zero(num_classes);
  return p;
}

/// logits = A_hat . ReLU(A_hat . X . W0 + b0) . W1 + b1
inline Eigen::MatrixXd gcn_forward(const NormalizedAdjacency& a, const Eigen::MatrixXd& x,
                                   const GcnParams& p) {
  if (x.rows() != a.n || x.cols() != p.W0.rows()) {
    throw std::invalid_argument("gcn_forward: dimension mismatch");
  }
  const Eigen::MatrixXd h1 =
      ((a.apply(x) * p.W0).rowwise() + p.b0.transpose()).cwiseMax(0.0);
  return (a.apply(h1) * p.W1).rowwise() + p.b1.transpose();
}

inline Eigen::MatrixXd mlp_forward(const Eigen::MatrixXd& x, const GcnParams& p) {
  if (x.cols() != p.W0.rows()) throw std::invalid_argument("mlp_forward: dimension mismatch");
  const Eigen::MatrixXd h1 = ((x * p.W0).rowwise() + p.b0.transpose()).cwiseMax(0.0);
  return (h1 * p.W1).rowwise() + p.b1.transpose();
}

/// Mean softmax cross-entropy over the masked nodes.
inline double masked_softmax_xent(const Eigen::MatrixXd& logits,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& mask) {
  if (mask.empty()) throw std::invalid_argument("masked_softmax_xent: empty mask");
  double loss = 0.0;
  for (int i : mask) {
    const Eigen::RowVectorXd row = logits.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    loss += lse - row(labels[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(mask.size());
}

struct GcnGrads {
  Eigen::MatrixXd dW0, dW1;
  Eigen::VectorXd db0, db1;
};

namespace detail {

// softmax(logits) - onehot, scaled by 1/|mask| on masked rows, zero elsewhere
inline Eigen::MatrixXd masked_xent_dlogits(const Eigen::MatrixXd& logits,
                                           const std::vector<int>& labels,
                                           const std::vector<int>& mask) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const double scale = 1.0 / static_cast<double>(mask.size());
  for (int i : mask) {
    const Eigen::RowVectorXd row = logits.row(i);
    const double m = row.maxCoeff();
    Eigen::RowVectorXd p = (row.array() - m).exp();
    p /= p.sum();
    p(labels[static_cast<std::size_t>(i)]) -= 1.0;
    d.row(i) = scale * p;
  }
  return d;
}

}  // namespace detail

/// Hand-derived backprop through both propagation layers. A_hat is symmetric
/// so its transpose reuses apply().
inline double gcn_loss_and_grads_dropout(const NormalizedAdjacency& a,
                                         const Eigen::MatrixXd& x, const GcnParams& p,
                                         const std::vector<int>& labels,
                                         const std::vector<int>& mask, GcnGrads& g,
                                         const Eigen::MatrixXd* dropout_mask) {
  const Eigen::MatrixXd ax = a.apply(x);
  const Eigen::MatrixXd z1 = (ax * p.W0).rowwise() + p.b0.transpose();
  Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  if (dropout_mask) h1 = h1.cwiseProduct(*dropout_mask);
  const Eigen::MatrixXd ah1 = a.apply(h1);
  const Eigen::MatrixXd logits = (ah1 * p.W1).rowwise() + p.b1.transpose();

  const double loss = masked_softmax_xent(logits, labels, mask);
  const Eigen::MatrixXd dlogits = detail::masked_xent_dlogits(logits, labels, mask);

  g.dW1 = ah1.transpose() * dlogits;
  g.db1 = dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dh1 = a.apply(dlogits) * p.W1.transpose();
  if (dropout_mask) dh1 = dh1.cwiseProduct(*dropout_mask);
  const Eigen::MatrixXd dz1 = (z1.array() > 0.0).select(dh1, 0.0);
  g.dW0 = ax.transpose() * dz1;
  g.db0 = dz1.colwise().sum().transpose();
  return loss;
}

inline double gcn_loss_and_grads(const NormalizedAdjacency& a, const Eigen::MatrixXd& x,
                                 const GcnParams& p, const std::vector<int>& labels,
                                 const std::vector<int>& mask, GcnGrads& g) {
  return gcn_loss_and_grads_dropout(a, x, p, labels, mask, g, nullptr);
}

inline double mlp_loss_and_grads(const Eigen::MatrixXd& x, const GcnParams& p,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& mask, GcnGrads& g) {
  const Eigen::MatrixXd z1 = (x * p.W0).rowwise() + p.b0.transpose();
  const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd logits = (h1 * p.W1).rowwise() + p.b1.transpose();

  const double loss = masked_softmax_xent(logits, labels, mask);
  const Eigen::MatrixXd dlogits = detail::masked_xent_dlogits(logits, labels, mask);

  g.dW1 = h1.transpose() * dlogits;
  g.db1 = dlogits.colwise().sum().transpose();
  const Eigen::MatrixXd dh1 = dlogits * p.W1.transpose();
  const Eigen::MatrixXd dz1 = (z1.array() > 0.0).select(dh1, 0.0);
  g.dW0 = x.transpose() * dz1;
  g.db0 = dz1.colwise().sum().transpose();
  return loss;
}

/// Argmax accuracy over masked nodes; ties go to the lowest class index.
inline double evaluate_accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                                const std::vector<int>& mask) {
  if (mask.empty()) throw std::invalid_argument("evaluate_accuracy: empty mask");
  std::size_t correct = 0;
  for (int i : mask) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);  // first occurrence = lowest index
    if (static_cast<int>(best) == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

struct GcnConfig {
  int hidden = 128;
  double lr = 0.01;
  int epochs = 300;
  int patience = 30;
  double weight_decay = 5e-4;
  double dropout = 0.0;  // hidden-activation drop probability, off by default
  std::uint64_t seed = 1;
};

struct TrainReport {
  double best_valid_accuracy = 0.0;
  double test_accuracy = 0.0;
  int epochs_run = 0;
  std::vector<double> loss_curve;
};

inline nlohmann::json report_to_json(const TrainReport& r) {
  return {{"best_valid_accuracy", r.best_valid_accuracy},
          {"test_accuracy", r.test_accuracy},
          {"epochs_run", r.epochs_run},
          {"loss_curve", r.loss_curve}};
}

inline void save_loss_curve_csv(const TrainReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_loss_curve_csv: cannot write " + path.string());
  out << "epoch,loss\n";
  out.precision(17);
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) out << e << ',' << r.loss_curve[e] << '\n';
}

namespace detail {

template <typename LossGradFn, typename ForwardFn>
std::pair<GcnParams, TrainReport> train_two_layer(int in_dim, int num_classes,
                                                  const std::vector<int>& labels,
                                                  const NodeSplit& split,
                                                  const GcnConfig& cfg,
                                                  LossGradFn&& loss_grads,
                                                  ForwardFn&& forward) {
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw std::invalid_argument("GcnConfig: dropout must be in [0, 1)");
  }
  GcnParams p = init_gcn_params(in_dim, cfg.hidden, num_classes, cfg.seed);
  AdamState sW0, sW1, sb0, sb1;
  sW0.init(p.W0.rows(), p.W0.cols());
  sW1.init(p.W1.rows(), p.W1.cols());
  sb0.init(p.b0.size(), 1);
  sb1.init(p.b1.size(), 1);

  TrainReport report;
  GcnParams best = p;
  double best_valid = -1.0;
  int since_best = 0;
  GcnGrads g;
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9d2c5680cafe1234ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd drop_mask;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::MatrixXd* mask_ptr = nullptr;
    if (cfg.dropout > 0.0) {
      // inverted dropout on hidden activations, resampled each epoch
      drop_mask.resize(static_cast<Eigen::Index>(labels.size()), cfg.hidden);
      const double keep = 1.0 - cfg.dropout;
      for (Eigen::Index r = 0; r < drop_mask.rows(); ++r) {
        for (Eigen::Index c = 0; c < drop_mask.cols(); ++c) {
          drop_mask(r, c) = (unit(dropout_rng) < keep) ? 1.0 / keep : 0.0;
        }
      }
      mask_ptr = &drop_mask;
    }
    const double loss = loss_grads(p, g, mask_ptr);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    }
    report.loss_curve.push_back(loss);
    // decoupled L2 on the weight matrices only
    g.dW0 += cfg.weight_decay * p.W0;
    g.dW1 += cfg.weight_decay * p.W1;
    const int t = epoch + 1;
    sW0.step(p.W0, g.dW0, cfg.lr, t);
    sW1.step(p.W1, g.dW1, cfg.lr, t);
    sb0.step(p.b0, g.db0, cfg.lr, t);
    sb1.step(p.b1, g.db1, cfg.lr, t);
    report.epochs_run = t;

    const Eigen::MatrixXd logits = forward(p);
    const double valid_acc = evaluate_accuracy(logits, labels, split.valid);
    if (valid_acc > best_valid) {
      best_valid = valid_acc;
      best = p;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  report.best_valid_accuracy = best_valid;
  const Eigen::MatrixXd best_logits = forward(best);
  report.test_accuracy = evaluate_accuracy(best_logits, labels, split.test);
  return {std::move(best), std::move(report)};
}

}  // namespace detail

/// Full-batch training with adaptive moments and validation-accuracy early
/// stopping; test accuracy is measured at the best-validation checkpoint.
inline std::pair<GcnParams, TrainReport> train_gcn(const NormalizedAdjacency& a,
                                                   const Eigen::MatrixXd& x,
                                                   const std::vector<int>& labels,
                                                   const NodeSplit& split,
                                                   const GcnConfig& cfg,
                                                   int num_classes) {
  return detail::train_two_layer(
      static_cast<int>(x.cols()), num_classes, labels, split, cfg,
      [&](const GcnParams& p, GcnGrads& g, const Eigen::MatrixXd* drop) {
        return gcn_loss_and_grads_dropout(a, x, p, labels, split.train, g, drop);
      },
      [&](const GcnParams& p) { return gcn_forward(a, x, p); });
}

/// Structure-free baseline: same protocol, no propagation.
inline std::pair<GcnParams, TrainReport> train_mlp(const Eigen::MatrixXd& x,
                                                   const std::vector<int>& labels,
                                                   const NodeSplit& split,
                                                   const GcnConfig& cfg,
                                                   int num_classes) {
  return detail::train_two_layer(
      static_cast<int>(x.cols()), num_classes, labels, split, cfg,
      [&](const GcnParams& p, GcnGrads& g, const Eigen::MatrixXd*) {
        return mlp_loss_and_grads(x, p, labels, split.train, g);
      },
      [&](const GcnParams& p) { return mlp_forward(x, p); });
}

}  // namespace graphedit
