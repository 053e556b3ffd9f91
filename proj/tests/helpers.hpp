#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "graphedit/dataset_io.hpp"
#include "graphedit/graph.hpp"

namespace test_helpers {

using graphedit::TextGraph;

// Independent dense route for the propagation matrix: D^{-1/2}(A+I)D^{-1/2}
// computed with plain matrix arithmetic.
inline Eigen::MatrixXd dense_normalized(const TextGraph& g) {
  const int n = g.num_nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [u, v] : g.edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  Eigen::VectorXd dinv_sqrt(n);
  for (int i = 0; i < n; ++i) dinv_sqrt(i) = 1.0 / std::sqrt(a.row(i).sum());
  return dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();
}

inline TextGraph random_graph(int n, double p, std::uint64_t seed, int num_classes = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<graphedit::NodeRecord> nodes;
  for (int i = 0; i < n; ++i) {
    graphedit::NodeRecord r;
    r.id = i;
    r.title = "node " + std::to_string(i);
    r.label = i % num_classes;
    nodes.push_back(r);
  }
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unit(rng) < p) edges.emplace_back(i, j);
    }
  }
  std::vector<std::string> cats;
  for (int c = 0; c < num_classes; ++c) cats.push_back("Class " + std::to_string(c));
  return graphedit::build_graph(nodes, edges, cats);
}

inline TextGraph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  auto g = random_graph(n, 0.0, 0);
  for (const auto& e : edges) g.edges.insert(e);
  return g;
}

// Relative error with an absolute floor, for comparing gradients.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline graphedit::SyntheticSpec default_sbm(std::uint64_t seed = 5) {
  graphedit::SyntheticSpec s;
  s.n = 300;
  s.num_classes = 3;
  s.p_in = 0.05;
  s.p_out = 0.02;
  s.seed = seed;
  return s;
}

}  // namespace test_helpers
