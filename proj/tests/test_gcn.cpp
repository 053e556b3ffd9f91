#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "graphedit/dataset_io.hpp"
#include "graphedit/embeddings.hpp"
#include "graphedit/gcn.hpp"
#include "helpers.hpp"

using namespace graphedit;
using test_helpers::dense_normalized;
using test_helpers::random_graph;

namespace {

std::vector<int> labels_of(const TextGraph& g) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(g.num_nodes()));
  for (const auto& n : g.nodes) out.push_back(n.label);
  return out;
}

GcnParams zero_params(int in_dim, int hidden, int classes) {
  GcnParams p;
  p.W0 = Eigen::MatrixXd::Zero(in_dim, hidden);
  p.W1 = Eigen::MatrixXd::Zero(hidden, classes);
  p.b0 = Eigen::VectorXd::Zero(hidden);
  p.b1 = Eigen::VectorXd::Zero(classes);
  return p;
}

}  // namespace

TEST_CASE("gcn_forward matches the dense-oracle computation") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const auto g = random_graph(n, 0.3, rng());
    const auto a = normalize_adjacency(g);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, 5);
    auto p = init_gcn_params(5, 7, 3, rng());
    p.b0 = Eigen::VectorXd::Random(7) * 0.1;
    p.b1 = Eigen::VectorXd::Random(3) * 0.1;

    const Eigen::MatrixXd ahat = dense_normalized(g);
    const Eigen::MatrixXd h1 =
        ((ahat * x * p.W0).rowwise() + p.b0.transpose()).cwiseMax(0.0);
    const Eigen::MatrixXd want = (ahat * h1 * p.W1).rowwise() + p.b1.transpose();
    const Eigen::MatrixXd got = gcn_forward(a, x, p);
    REQUIRE((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gcn_forward on a single isolated node reduces to the plain MLP") {
  const auto g = random_graph(1, 0.0, 0, 1);
  const auto a = normalize_adjacency(g);  // A_hat = [1]
  Eigen::MatrixXd x(1, 1);
  x(0, 0) = 2.0;
  auto p = zero_params(1, 2, 2);
  p.W0 << 1.0, -1.0;
  p.W1 << 1.0, 0.0, 0.0, 1.0;
  const Eigen::MatrixXd logits = gcn_forward(a, x, p);
  REQUIRE(logits(0, 0) == 2.0);  // ReLU(2*1)=2; ReLU(-2)=0
  REQUIRE(logits(0, 1) == 0.0);
  REQUIRE((logits - mlp_forward(x, p)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gcn_forward rejects mismatched shapes") {
  const auto g = random_graph(4, 0.5, 1);
  const auto a = normalize_adjacency(g);
  const auto p = init_gcn_params(5, 4, 3, 1);
  REQUIRE_THROWS(gcn_forward(a, Eigen::MatrixXd::Random(4, 6), p));
  REQUIRE_THROWS(gcn_forward(a, Eigen::MatrixXd::Random(3, 5), p));
}

TEST_CASE("masked cross-entropy closed forms") {
  const std::vector<int> labels{0, 1, 2, 0};
  const std::vector<int> mask{0, 1, 2, 3};
  SECTION("zero logits give ln C") {
    const Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(4, 3);
    REQUIRE(masked_softmax_xent(logits, labels, mask) ==
            Catch::Approx(std::log(3.0)).epsilon(1e-12));
  }
  SECTION("saturated one-hot logits give near-zero loss") {
    Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(4, 3);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      logits(static_cast<Eigen::Index>(i), labels[i]) = 100.0;
    }
    REQUIRE(masked_softmax_xent(logits, labels, mask) < 1e-3);
  }
  SECTION("huge logits stay finite (log-sum-exp stability)") {
    Eigen::MatrixXd logits = Eigen::MatrixXd::Constant(4, 3, 1e4);
    logits.col(0).array() += 1e4;
    REQUIRE(std::isfinite(masked_softmax_xent(logits, labels, mask)));
  }
  SECTION("empty mask rejected") {
    REQUIRE_THROWS(masked_softmax_xent(Eigen::MatrixXd::Zero(4, 3), labels, {}));
  }
}

TEST_CASE("gcn gradients match central finite differences") {
  const int n = 12, in_dim = 8, hidden = 4, classes = 3;
  const auto g = random_graph(n, 0.3, 13, classes);
  const auto a = normalize_adjacency(g);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, in_dim);
  auto p = init_gcn_params(in_dim, hidden, classes, 14);
  p.b0 = Eigen::VectorXd::Random(hidden) * 0.1;
  p.b1 = Eigen::VectorXd::Random(classes) * 0.1;
  const auto labels = labels_of(g);
  const std::vector<int> mask{0, 2, 3, 5, 7, 11};

  GcnGrads grads;
  gcn_loss_and_grads(a, x, p, labels, mask, grads);

  GcnGrads scratch;
  const double eps = 1e-5;
  double max_err = 0.0;
  auto check = [&](double* param, double analytic) {
    const double keep = *param;
    *param = keep + eps;
    const double up = gcn_loss_and_grads(a, x, p, labels, mask, scratch);
    *param = keep - eps;
    const double dn = gcn_loss_and_grads(a, x, p, labels, mask, scratch);
    *param = keep;
    max_err = std::max(max_err, test_helpers::rel_err((up - dn) / (2 * eps), analytic));
  };
  for (int r = 0; r < p.W0.rows(); ++r)
    for (int c = 0; c < p.W0.cols(); ++c) check(&p.W0(r, c), grads.dW0(r, c));
  for (int r = 0; r < p.W1.rows(); ++r)
    for (int c = 0; c < p.W1.cols(); ++c) check(&p.W1(r, c), grads.dW1(r, c));
  for (int c = 0; c < p.b0.size(); ++c) check(&p.b0(c), grads.db0(c));
  for (int c = 0; c < p.b1.size(); ++c) check(&p.b1(c), grads.db1(c));
  REQUIRE(max_err < 1e-4);
}

TEST_CASE("mlp gradients match central finite differences") {
  const int n = 12, in_dim = 8, hidden = 4, classes = 3;
  const auto g = random_graph(n, 0.0, 15, classes);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, in_dim);
  auto p = init_gcn_params(in_dim, hidden, classes, 16);
  p.b0 = Eigen::VectorXd::Random(hidden) * 0.1;
  const auto labels = labels_of(g);
  const std::vector<int> mask{1, 4, 6, 9};

  GcnGrads grads;
  mlp_loss_and_grads(x, p, labels, mask, grads);

  GcnGrads scratch;
  const double eps = 1e-5;
  double max_err = 0.0;
  auto check = [&](double* param, double analytic) {
    const double keep = *param;
    *param = keep + eps;
    const double up = mlp_loss_and_grads(x, p, labels, mask, scratch);
    *param = keep - eps;
    const double dn = mlp_loss_and_grads(x, p, labels, mask, scratch);
    *param = keep;
    max_err = std::max(max_err, test_helpers::rel_err((up - dn) / (2 * eps), analytic));
  };
  for (int r = 0; r < p.W0.rows(); ++r)
    for (int c = 0; c < p.W0.cols(); ++c) check(&p.W0(r, c), grads.dW0(r, c));
  for (int r = 0; r < p.W1.rows(); ++r)
    for (int c = 0; c < p.W1.cols(); ++c) check(&p.W1(r, c), grads.dW1(r, c));
  for (int c = 0; c < p.b0.size(); ++c) check(&p.b0(c), grads.db0(c));
  for (int c = 0; c < p.b1.size(); ++c) check(&p.b1(c), grads.db1(c));
  REQUIRE(max_err < 1e-4);
}

TEST_CASE("gcn_forward is permutation-equivariant") {
  const int n = 14;
  const auto g = random_graph(n, 0.3, 17);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, 6);
  const auto p = init_gcn_params(6, 5, 3, 18);
  const Eigen::MatrixXd logits = gcn_forward(normalize_adjacency(g), x, p);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(19));
  // perm[i] = new id of old node i
  auto nodes = g.nodes;
  std::vector<NodeRecord> permuted(nodes.size());
  for (int i = 0; i < n; ++i) {
    permuted[static_cast<std::size_t>(perm[i])] = nodes[static_cast<std::size_t>(i)];
    permuted[static_cast<std::size_t>(perm[i])].id = perm[i];
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& [u, v] : g.edges) edges.emplace_back(perm[u], perm[v]);
  const auto gp = build_graph(permuted, edges, g.category_names);
  Eigen::MatrixXd xp(n, 6);
  for (int i = 0; i < n; ++i) xp.row(perm[i]) = x.row(i);
  const Eigen::MatrixXd logits_p = gcn_forward(normalize_adjacency(gp), xp, p);
  for (int i = 0; i < n; ++i) {
    REQUIRE((logits_p.row(perm[i]) - logits.row(i)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("evaluate_accuracy tie-break and scale invariance") {
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(4, 3);
  const std::vector<int> mask{0, 1, 2, 3};
  SECTION("all-zero logits resolve to class 0") {
    REQUIRE(evaluate_accuracy(logits, {0, 0, 0, 0}, mask) == 1.0);
    REQUIRE(evaluate_accuracy(logits, {1, 1, 1, 1}, mask) == 0.0);
  }
  SECTION("half correct") {
    logits(0, 1) = 1.0;
    logits(1, 1) = 1.0;
    // nodes 2 and 3 tie-break to class 0
    REQUIRE(evaluate_accuracy(logits, {1, 0, 0, 1}, mask) == 0.5);
  }
  SECTION("positive rescaling never changes accuracy") {
    logits = Eigen::MatrixXd::Random(4, 3);
    const std::vector<int> labels{2, 0, 1, 2};
    const double base = evaluate_accuracy(logits, labels, mask);
    REQUIRE(evaluate_accuracy(logits * 100.0, labels, mask) == base);
    REQUIRE(evaluate_accuracy(logits * 1e-6, labels, mask) == base);
  }
  SECTION("empty mask rejected") {
    REQUIRE_THROWS(evaluate_accuracy(logits, {0, 0, 0, 0}, {}));
  }
}

TEST_CASE("gcn reaches > 0.85 test accuracy on the clean synthetic graph") {
  const auto g = generate_synthetic(test_helpers::default_sbm(5));
  HashedBowProvider provider(64, 7);
  const auto emb = embed_nodes(g, provider);
  const auto split = split_nodes(g, 0.6, 0.2, 0.2, 1);
  GcnConfig cfg;
  const auto [params, report] =
      train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3);
  REQUIRE(report.test_accuracy > 0.85);
  REQUIRE(report.best_valid_accuracy >= 0.0);
  REQUIRE(report.best_valid_accuracy <= 1.0);
}

TEST_CASE("shuffled labels drive test accuracy to chance") {
  const auto g = generate_synthetic(test_helpers::default_sbm(6));
  HashedBowProvider provider(64, 7);
  const auto emb = embed_nodes(g, provider);
  const auto split = split_nodes(g, 0.6, 0.2, 0.2, 1);
  auto labels = labels_of(g);
  std::shuffle(labels.begin(), labels.end(), std::mt19937_64(3));
  GcnConfig cfg;
  cfg.epochs = 100;
  const auto [params, report] =
      train_gcn(normalize_adjacency(g), emb.vectors, labels, split, cfg, 3);
  REQUIRE(std::abs(report.test_accuracy - 1.0 / 3.0) < 0.1 + 1e-12);
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto g = generate_synthetic(test_helpers::default_sbm(9));
  HashedBowProvider provider(64, 7);
  const auto emb = embed_nodes(g, provider);
  const auto split = split_nodes(g, 0.6, 0.2, 0.2, 2);
  GcnConfig cfg;
  cfg.epochs = 40;
  const auto a = train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3);
  const auto b = train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3);
  REQUIRE(a.second.loss_curve == b.second.loss_curve);
  REQUIRE(a.second.test_accuracy == b.second.test_accuracy);
  REQUIRE(a.first.W0 == b.first.W0);
}

TEST_CASE("early stopping halts before the epoch budget on an easy instance") {
  const auto g = generate_synthetic(test_helpers::default_sbm(10));
  HashedBowProvider provider(64, 7);
  const auto emb = embed_nodes(g, provider);
  const auto split = split_nodes(g, 0.6, 0.2, 0.2, 3);
  GcnConfig cfg;
  cfg.epochs = 300;
  cfg.patience = 10;
  const auto [params, report] =
      train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3);
  REQUIRE(report.epochs_run < cfg.epochs);
  for (double l : report.loss_curve) REQUIRE(std::isfinite(l));
}

TEST_CASE("mlp baseline: above chance on weak text features, below gcn on average") {
  // short node text makes the graph structure matter more than raw features
  auto spec = test_helpers::default_sbm(0);
  spec.tokens_per_node = 8;
  HashedBowProvider provider(64, 7);
  double mlp_sum = 0.0, gcn_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    spec.seed = seed;
    const auto g = generate_synthetic(spec);
    const auto emb = embed_nodes(g, provider);
    const auto split = split_nodes(g, 0.6, 0.2, 0.2, seed);
    GcnConfig cfg;
    cfg.seed = seed;
    const auto labels = labels_of(g);
    const auto mlp = train_mlp(emb.vectors, labels, split, cfg, 3);
    const auto gcn = train_gcn(normalize_adjacency(g), emb.vectors, labels, split, cfg, 3);
    REQUIRE(mlp.second.test_accuracy > 1.0 / 3.0 + 0.1);
    mlp_sum += mlp.second.test_accuracy;
    gcn_sum += gcn.second.test_accuracy;
  }
  REQUIRE(gcn_sum > mlp_sum);
}

TEST_CASE("mlp on a zero feature matrix stays near chance") {
  const auto g = generate_synthetic(test_helpers::default_sbm(12));
  const auto split = split_nodes(g, 0.6, 0.2, 0.2, 5);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.num_nodes(), 32);
  GcnConfig cfg;
  cfg.epochs = 50;
  const auto [params, report] = train_mlp(x, labels_of(g), split, cfg, 3);
  REQUIRE(std::abs(report.test_accuracy - 1.0 / 3.0) < 0.2);
}

TEST_CASE("dropout training runs, stays deterministic, and rejects bad rates") {
  const auto g = generate_synthetic(test_helpers::default_sbm(14));
  HashedBowProvider provider(64, 7);
  const auto emb = embed_nodes(g, provider);
  const auto split = split_nodes(g, 0.6, 0.2, 0.2, 6);
  GcnConfig cfg;
  cfg.epochs = 30;
  cfg.dropout = 0.5;
  const auto a = train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3);
  const auto b = train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3);
  REQUIRE(a.second.loss_curve == b.second.loss_curve);
  cfg.dropout = 1.0;
  REQUIRE_THROWS(
      train_gcn(normalize_adjacency(g), emb.vectors, labels_of(g), split, cfg, 3));
}

TEST_CASE("report JSON and loss-curve CSV exports") {
  TrainReport r;
  r.best_valid_accuracy = 0.9;
  r.test_accuracy = 0.85;
  r.epochs_run = 2;
  r.loss_curve = {1.0, 0.5};
  const auto j = report_to_json(r);
  REQUIRE(j.at("test_accuracy") == 0.85);
  REQUIRE(j.at("loss_curve").size() == 2);
  const auto path = std::filesystem::temp_directory_path() / "graphedit_curve_test.csv";
  save_loss_curve_csv(r, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "epoch,loss");
  std::getline(in, line);
  REQUIRE(line.rfind("0,", 0) == 0);
  std::filesystem::remove(path);
}
