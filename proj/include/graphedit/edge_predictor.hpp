#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphedit/embeddings.hpp"
#include "graphedit/graph.hpp"

namespace graphedit {

/// A sampled node pair. y is the label-consistency target: 1 iff both nodes
/// share a class. y = -1 marks a pair not yet labeled.
struct PairSample {
  int i = 0;
  int j = 0;
  int y = -1;
  int ci = -1;
  int cj = -1;
};

/// Uniform sampling over ordered train-node pairs excluding self-pairs,
/// with replacement.
inline std::vector<PairSample> sample_pairs(const std::vector<int>& train_nodes,
                                            std::size_t m, std::uint64_t seed) {
  if (train_nodes.size() < 2) throw std::invalid_argument("sample_pairs: need >= 2 nodes");
  if (m == 0) throw std::invalid_argument("sample_pairs: m must be >= 1");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<int>(train_nodes.size());
  std::uniform_int_distribution<int> first(0, n - 1);
  std::uniform_int_distribution<int> second(0, n - 2);
  std::vector<PairSample> out;
  out.reserve(m);
  for (std::size_t t = 0; t < m; ++t) {
    const int a = first(rng);
    int b = second(rng);
    if (b >= a) ++b;  // shifts past a, so a != b exactly
    PairSample s;
    s.i = train_nodes[static_cast<std::size_t>(a)];
    s.j = train_nodes[static_cast<std::size_t>(b)];
    out.push_back(s);
  }
  return out;
}

inline std::vector<PairSample> label_pairs(std::vector<PairSample> pairs,
                                           const TextGraph& g) {
  for (PairSample& p : pairs) {
    if (p.i < 0 || p.i >= g.num_nodes() || p.j < 0 || p.j >= g.num_nodes()) {
      throw std::invalid_argument("label_pairs: node index out of range");
    }
    p.ci = g.nodes[static_cast<std::size_t>(p.i)].label;
    p.cj = g.nodes[static_cast<std::size_t>(p.j)].label;
    p.y = (p.ci == p.cj) ? 1 : 0;
  }
  return pairs;
}

/// One-hidden-layer scorer on the ordered concatenation [h_i ; h_j]:
/// sigmoid(w2 . ReLU(W1^T x + b1) + b2).
struct EdgePredictorModel {
  Eigen::MatrixXd W1;  // 2d x h
  Eigen::VectorXd b1;  // h
  Eigen::VectorXd w2;  // h
  double b2 = 0.0;
  int d = 0;
  int h = 0;
};

inline double predict_edge(const EdgePredictorModel& m, const Eigen::VectorXd& hi,
                           const Eigen::VectorXd& hj) {
  if (hi.size() != m.d || hj.size() != m.d) {
    throw std::invalid_argument("predict_edge: embedding dimension mismatch");
  }
  Eigen::VectorXd x(2 * m.d);
  x << hi, hj;
  const Eigen::VectorXd a1 = (m.W1.transpose() * x + m.b1).cwiseMax(0.0);
  const double z = m.w2.dot(a1) + m.b2;
  return 1.0 / (1.0 + std::exp(-z));
}

/// Mean of both concatenation orders; used everywhere downstream.
inline double symmetrized_score(const EdgePredictorModel& m, const Eigen::VectorXd& hi,
                                const Eigen::VectorXd& hj) {
  return 0.5 * (predict_edge(m, hi, hj) + predict_edge(m, hj, hi));
}

struct EdgePredictorGrads {
  Eigen::MatrixXd dW1;
  Eigen::VectorXd db1;
  Eigen::VectorXd dw2;
  double db2 = 0.0;
};

/// Mean binary cross-entropy and its analytic gradients over a batch.
/// X is B x 2d (ordered concatenations), y in {0,1}. pos_weight scales the
/// positive-class term.
inline double edge_predictor_loss_and_grads(const EdgePredictorModel& m,
                                            const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& y,
                                            EdgePredictorGrads& grads,
                                            double pos_weight = 1.0) {
  const auto B = X.rows();
  if (B == 0) throw std::invalid_argument("edge_predictor_loss_and_grads: empty batch");
  const Eigen::MatrixXd Z1 = (X * m.W1).rowwise() + m.b1.transpose();  // B x h
  const Eigen::MatrixXd A1 = Z1.cwiseMax(0.0);
  const Eigen::VectorXd z2 = A1 * m.w2 + Eigen::VectorXd::Constant(B, m.b2);
  const Eigen::VectorXd p = z2.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });

  double loss = 0.0;
  Eigen::VectorXd dz2(B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const double pb = std::min(std::max(p(b), 1e-15), 1.0 - 1e-15);
    const double w = (y(b) > 0.5) ? pos_weight : 1.0;
    loss += -w * (y(b) * std::log(pb) + (1.0 - y(b)) * std::log(1.0 - pb));
    dz2(b) = w * (p(b) - y(b));
  }
  const double scale = 1.0 / static_cast<double>(B);
  loss *= scale;
  dz2 *= scale;

  grads.dw2 = A1.transpose() * dz2;
  grads.db2 = dz2.sum();
  Eigen::MatrixXd dA1 = dz2 * m.w2.transpose();  // B x h
  Eigen::MatrixXd dZ1 = (Z1.array() > 0.0).select(dA1, 0.0);
  grads.dW1 = X.transpose() * dZ1;
  grads.db1 = dZ1.colwise().sum().transpose();
  return loss;
}

struct EdgePredictorConfig {
  int hidden = 128;
  double lr = 1e-3;
  int epochs = 200;
  int batch = 256;
  std::uint64_t seed = 1;
  double pos_weight = 1.0;  // optional positive-class reweighting
};

struct EdgePredictorTrainResult {
  EdgePredictorModel model;
  double final_loss = 0.0;
  std::vector<double> loss_curve;  // mean loss per epoch
};

namespace detail {

// Glorot-uniform draws via a seeded engine.
inline Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = u(rng);
  return w;
}

// First-order adaptive-moment optimizer state for one parameter tensor.
struct AdamState {
  Eigen::MatrixXd m, v;
  void init(Eigen::Index rows, Eigen::Index cols) {
    m = Eigen::MatrixXd::Zero(rows, cols);
    v = Eigen::MatrixXd::Zero(rows, cols);
  }
  void step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, double lr,
            int t, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    param -= (lr / bc1) * m.cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
  }
};

}  // namespace detail

inline EdgePredictorModel init_edge_predictor(int d, int hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EdgePredictorModel m;
  m.d = d;
  m.h = hidden;
  m.W1 = detail::glorot(2 * d, hidden, rng);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2 = detail::glorot(hidden, 1, rng).col(0);
  m.b2 = 0.0;
  return m;
}

inline Eigen::MatrixXd concat_pairs(const EmbeddingMatrix& emb,
                                    const std::vector<PairSample>& samples) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), 2 * emb.dim);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    X.row(static_cast<Eigen::Index>(s)) << emb.vectors.row(samples[s].i),
        emb.vectors.row(samples[s].j);
  }
  return X;
}

/// Minibatch training of the prediction layer with binary cross-entropy.
/// Deterministic given cfg.seed.
inline EdgePredictorTrainResult train_edge_predictor(const EmbeddingMatrix& emb,
                                                     const std::vector<PairSample>& samples,
                                                     const EdgePredictorConfig& cfg) {
  std::size_t pos = 0;
  for (const PairSample& s : samples) {
    if (s.y != 0 && s.y != 1) {
      throw std::invalid_argument("train_edge_predictor: unlabeled pair");
    }
    pos += static_cast<std::size_t>(s.y);
  }
  if (pos == 0 || pos == samples.size()) {
    throw std::invalid_argument(
        "train_edge_predictor: need at least one positive and one negative sample");
  }

  const Eigen::MatrixXd X = concat_pairs(emb, samples);
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    y(static_cast<Eigen::Index>(s)) = samples[s].y;
  }

  EdgePredictorTrainResult out;
  out.model = init_edge_predictor(emb.dim, cfg.hidden, cfg.seed);
  EdgePredictorModel& m = out.model;

  detail::AdamState sW1, sb1, sw2, sb2;
  sW1.init(m.W1.rows(), m.W1.cols());
  sb1.init(m.b1.size(), 1);
  sw2.init(m.w2.size(), 1);
  sb2.init(1, 1);

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bf0f1ad12e49cf7ull);
  std::vector<Eigen::Index> order(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) order[s] = static_cast<Eigen::Index>(s);

  EdgePredictorGrads grads;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    Eigen::Index done = 0;
    while (done < static_cast<Eigen::Index>(order.size())) {
      const Eigen::Index bsz =
          std::min<Eigen::Index>(cfg.batch, static_cast<Eigen::Index>(order.size()) - done);
      Eigen::MatrixXd Xb(bsz, X.cols());
      Eigen::VectorXd yb(bsz);
      for (Eigen::Index r = 0; r < bsz; ++r) {
        Xb.row(r) = X.row(order[static_cast<std::size_t>(done + r)]);
        yb(r) = y(order[static_cast<std::size_t>(done + r)]);
      }
      const double loss = edge_predictor_loss_and_grads(m, Xb, yb, grads, cfg.pos_weight);
      epoch_loss += loss * static_cast<double>(bsz);
      ++step;
      sW1.step(m.W1, grads.dW1, cfg.lr, step);
      sb1.step(m.b1, grads.db1, cfg.lr, step);
      sw2.step(m.w2, grads.dw2, cfg.lr, step);
      Eigen::MatrixXd b2m(1, 1), gb2(1, 1);
      b2m(0, 0) = m.b2;
      gb2(0, 0) = grads.db2;
      sb2.step(b2m, gb2, cfg.lr, step);
      m.b2 = b2m(0, 0);
      done += bsz;
    }
    out.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  out.final_loss = out.loss_curve.empty() ? 0.0 : out.loss_curve.back();
  return out;
}

/// Per-node candidate lists: (neighbor, symmetrized probability), sorted by
/// score descending with ties broken by lower neighbor id.
struct CandidateSet {
  int k = 0;
  std::vector<std::vector<std::pair<int, double>>> per_node;
};

/// Scores every node against every other (or `restrict_to`) and keeps the k
/// highest. Existing graph edges are not excluded here; refinement dedups.
inline CandidateSet top_k_candidates(const EdgePredictorModel& m, const EmbeddingMatrix& emb,
                                     int k, const std::vector<int>* restrict_to = nullptr) {
  const int n = static_cast<int>(emb.vectors.rows());
  if (k < 1 || k > n - 1) throw std::invalid_argument("top_k_candidates: k out of [1, N-1]");

  // With W1 split into the halves acting on h_i and h_j, the pair hidden
  // layer is ReLU(P.row(i) + Q.row(j) + b1).
  const Eigen::MatrixXd P = emb.vectors * m.W1.topRows(m.d);     // N x h
  const Eigen::MatrixXd Q = emb.vectors * m.W1.bottomRows(m.d);  // N x h

  std::vector<int> targets;
  if (restrict_to) {
    targets = *restrict_to;
  } else {
    targets.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) targets[static_cast<std::size_t>(j)] = j;
  }

  auto logit = [&](int a, int b) {
    const Eigen::VectorXd a1 =
        (P.row(a) + Q.row(b) + m.b1.transpose()).cwiseMax(0.0).transpose();
    return m.w2.dot(a1) + m.b2;
  };
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

  CandidateSet out;
  out.k = k;
  out.per_node.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> scored;
    scored.reserve(targets.size());
    for (int j : targets) {
      if (j == i) continue;
      const double s = 0.5 * (sigmoid(logit(i, j)) + sigmoid(logit(j, i)));
      scored.emplace_back(j, s);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
    out.per_node[static_cast<std::size_t>(i)] = std::move(scored);
  }
  return out;
}

inline void save_edge_predictor(const EdgePredictorModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["d"] = m.d;
  j["h"] = m.h;
  j["b2"] = m.b2;
  std::vector<double> w1(static_cast<std::size_t>(m.W1.size()));
  Eigen::Map<Eigen::MatrixXd>(w1.data(), m.W1.rows(), m.W1.cols()) = m.W1;
  j["W1"] = w1;
  j["b1"] = std::vector<double>(m.b1.data(), m.b1.data() + m.b1.size());
  j["w2"] = std::vector<double>(m.w2.data(), m.w2.data() + m.w2.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_predictor: cannot write " + path.string());
  out << j.dump() << '\n';
}

inline EdgePredictorModel load_edge_predictor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_predictor: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.at("version").get<int>() != 1) {
    throw std::runtime_error("load_edge_predictor: unsupported version");
  }
  EdgePredictorModel m;
  m.d = j.at("d").get<int>();
  m.h = j.at("h").get<int>();
  m.b2 = j.at("b2").get<double>();
  const auto w1 = j.at("W1").get<std::vector<double>>();
  m.W1 = Eigen::Map<const Eigen::MatrixXd>(w1.data(), 2 * m.d, m.h);
  const auto b1 = j.at("b1").get<std::vector<double>>();
  m.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(), static_cast<Eigen::Index>(b1.size()));
  const auto w2 = j.at("w2").get<std::vector<double>>();
  m.w2 = Eigen::Map<const Eigen::VectorXd>(w2.data(), static_cast<Eigen::Index>(w2.size()));
  return m;
}

/// Tab-separated (node, neighbor, score) lines.
inline void save_candidates(const CandidateSet& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_candidates: cannot write " + path.string());
  out << "# node\tneighbor\tscore\n";
  out.precision(17);
  for (std::size_t i = 0; i < c.per_node.size(); ++i) {
    for (const auto& [j, s] : c.per_node[i]) out << i << '\t' << j << '\t' << s << '\n';
  }
}

inline CandidateSet load_candidates(const std::filesystem::path& path, int num_nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_candidates: cannot open " + path.string());
  CandidateSet c;
  c.per_node.resize(static_cast<std::size_t>(num_nodes));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    double s = 0.0;
    if (!(ls >> i >> j >> s)) throw std::runtime_error("load_candidates: malformed line");
    c.per_node.at(static_cast<std::size_t>(i)).emplace_back(j, s);
  }
  for (const auto& lst : c.per_node) {
    c.k = std::max(c.k, static_cast<int>(lst.size()));
  }
  return c;
}

}  // namespace graphedit
