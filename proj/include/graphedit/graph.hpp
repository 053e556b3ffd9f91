#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphedit/util.hpp"

namespace graphedit {

// Undirected edge, always stored as (min, max).
using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

struct NodeRecord {
  int id = 0;
  std::string title;
  std::string abstract_text;
  int label = 0;
  std::vector<double> features;  // empty when the dataset ships none
  int token_count = 0;
};

/// Text-attributed undirected graph. Immutable after construction; all
/// mutating operations return new values.
struct TextGraph {
  std::vector<NodeRecord> nodes;
  std::set<Edge> edges;
  int num_classes = 0;
  std::vector<std::string> category_names;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  bool has_edge(int a, int b) const { return edges.count(make_edge(a, b)) > 0; }

  std::string node_text(int i) const {
    const NodeRecord& n = nodes[static_cast<std::size_t>(i)];
    if (n.abstract_text.empty()) return n.title;
    return n.title + " " + n.abstract_text;
  }
};

/// Validates nodes and raw edges into a TextGraph: drops self-loops,
/// collapses duplicates and reversed duplicates, checks labels against the
/// category list.
inline TextGraph build_graph(std::vector<NodeRecord> nodes,
                             const std::vector<std::pair<int, int>>& raw_edges,
                             std::vector<std::string> categories) {
  if (categories.empty()) throw std::invalid_argument("build_graph: empty category list");
  TextGraph g;
  g.num_classes = static_cast<int>(categories.size());
  g.category_names = std::move(categories);
  const int n = static_cast<int>(nodes.size());
  std::set<int> seen_ids;
  for (const NodeRecord& node : nodes) {
    if (!seen_ids.insert(node.id).second) {
      throw std::invalid_argument("build_graph: duplicate node id " + std::to_string(node.id));
    }
    if (node.label < 0 || node.label >= g.num_classes) {
      throw std::invalid_argument("build_graph: node " + std::to_string(node.id) +
                                  " has label " + std::to_string(node.label) +
                                  " outside [0, " + std::to_string(g.num_classes) + ")");
    }
  }
  std::size_t feat_dim = 0;
  for (const NodeRecord& node : nodes) {
    if (node.features.empty()) continue;
    if (feat_dim == 0) feat_dim = node.features.size();
    if (node.features.size() != feat_dim) {
      throw std::invalid_argument("build_graph: inconsistent feature dimension at node " +
                                  std::to_string(node.id));
    }
  }
  g.nodes = std::move(nodes);
  for (const auto& [a, b] : raw_edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw std::invalid_argument("build_graph: edge (" + std::to_string(a) + ", " +
                                  std::to_string(b) + ") has endpoint outside [0, " +
                                  std::to_string(n) + ")");
    }
    if (a == b) continue;  // self-loops dropped at build time
    g.edges.insert(make_edge(a, b));
  }
  return g;
}

/// Symmetric propagation matrix for the two-layer GCN, stored as triplets
/// over both orientations plus the diagonal.
struct NormalizedAdjacency {
  int n = 0;
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<double> values;

  // Sparse-dense product: (N x N) * (N x D).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    if (x.rows() != n) throw std::invalid_argument("NormalizedAdjacency::apply: row mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, x.cols());
    for (std::size_t t = 0; t < values.size(); ++t) {
      out.row(rows[t]) += values[t] * x.row(cols[t]);
    }
    return out;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t = 0; t < values.size(); ++t) out(rows[t], cols[t]) += values[t];
    return out;
  }
};

/// D^{-1/2} (A + I) D^{-1/2} with D the degree of A + I. Isolated nodes get
/// a weight-1 self-loop.
inline NormalizedAdjacency normalize_adjacency(const TextGraph& g) {
  const int n = g.num_nodes();
  std::vector<double> deg(static_cast<std::size_t>(n), 1.0);  // self-loop
  for (const Edge& e : g.edges) {
    deg[static_cast<std::size_t>(e.first)] += 1.0;
    deg[static_cast<std::size_t>(e.second)] += 1.0;
  }
  NormalizedAdjacency a;
  a.n = n;
  a.rows.reserve(g.edges.size() * 2 + static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    a.rows.push_back(i);
    a.cols.push_back(i);
    a.values.push_back(1.0 / deg[static_cast<std::size_t>(i)]);
  }
  for (const Edge& e : g.edges) {
    const double w = 1.0 / std::sqrt(deg[static_cast<std::size_t>(e.first)] *
                                     deg[static_cast<std::size_t>(e.second)]);
    a.rows.push_back(e.first);
    a.cols.push_back(e.second);
    a.values.push_back(w);
    a.rows.push_back(e.second);
    a.cols.push_back(e.first);
    a.values.push_back(w);
  }
  return a;
}

/// Adds floor(rate * |edges|) uniformly random new undirected edges.
/// Rejection sampling capped at 50x the requested count.
inline TextGraph inject_noise(const TextGraph& g, double rate, std::uint64_t seed) {
  if (rate < 0.0) throw std::invalid_argument("inject_noise: negative rate");
  const auto count =
      static_cast<std::size_t>(rate * static_cast<double>(g.num_edges()));
  TextGraph out = g;
  if (count == 0) return out;
  const auto n = static_cast<std::size_t>(g.num_nodes());
  const std::size_t max_edges = n * (n - 1) / 2;
  if (g.edges.size() + count > max_edges) {
    throw std::invalid_argument("inject_noise: requested " + std::to_string(count) +
                                " noise edges but only " +
                                std::to_string(max_edges - g.edges.size()) +
                                " non-edges exist");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, g.num_nodes() - 1);
  std::size_t added = 0;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 50 * count;
  while (added < count) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("inject_noise: rejection sampling exceeded attempt cap");
    }
    const int a = pick(rng);
    const int b = pick(rng);
    if (a == b) continue;
    if (out.edges.insert(make_edge(a, b)).second) ++added;
  }
  return out;
}

struct NodeSplit {
  std::vector<int> train;
  std::vector<int> valid;
  std::vector<int> test;
};

/// Uniform shuffle then cut. train = floor(r0*N), valid = floor(r1*N),
/// test = remainder.
inline NodeSplit split_nodes(const TextGraph& g, double train_ratio, double valid_ratio,
                             double test_ratio, std::uint64_t seed) {
  if (train_ratio <= 0.0 || valid_ratio <= 0.0 || test_ratio <= 0.0) {
    throw std::invalid_argument("split_nodes: ratios must be positive");
  }
  if (std::abs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9) {
    throw std::invalid_argument("split_nodes: ratios must sum to 1");
  }
  const int n = g.num_nodes();
  if (n < 3) throw std::invalid_argument("split_nodes: need at least 3 nodes");
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(train_ratio * n);
  const auto n_valid = static_cast<std::size_t>(valid_ratio * n);
  NodeSplit s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), perm.end());
  return s;
}

struct GraphStats {
  int num_nodes = 0;
  int num_edges = 0;             // unordered pairs
  int num_directed_edges = 0;    // post-symmetrization count (2x)
  int num_classes = 0;
  int intra_class_edges = 0;
  int inter_class_edges = 0;
};

inline GraphStats graph_stats(const TextGraph& g) {
  GraphStats s;
  s.num_nodes = g.num_nodes();
  s.num_edges = g.num_edges();
  s.num_directed_edges = 2 * g.num_edges();
  s.num_classes = g.num_classes;
  for (const Edge& e : g.edges) {
    if (g.nodes[static_cast<std::size_t>(e.first)].label ==
        g.nodes[static_cast<std::size_t>(e.second)].label) {
      ++s.intra_class_edges;
    } else {
      ++s.inter_class_edges;
    }
  }
  return s;
}

/// DOT export of the subgraph induced by `subset`. Nodes are colored by
/// label; `added` edges render dashed green, `deleted` dotted red.
inline std::string to_dot(const TextGraph& g, const std::set<int>& subset,
                          const std::set<Edge>& added = {},
                          const std::set<Edge>& deleted = {}) {
  static const char* kPalette[] = {"lightblue",  "salmon",    "palegreen", "gold",
                                   "plum",       "lightgray", "orange",    "cyan",
                                   "lightpink",  "khaki"};
  for (int v : subset) {
    if (v < 0 || v >= g.num_nodes()) {
      throw std::invalid_argument("to_dot: node " + std::to_string(v) + " out of range");
    }
  }
  std::ostringstream os;
  os << "graph refined {\n  node [style=filled];\n";
  for (int v : subset) {
    const NodeRecord& n = g.nodes[static_cast<std::size_t>(v)];
    os << "  n" << v << " [label=\"" << v << "\", fillcolor="
       << kPalette[static_cast<std::size_t>(n.label) % 10] << "];\n";
  }
  auto emit = [&](const Edge& e, const char* attrs) {
    os << "  n" << e.first << " -- n" << e.second << attrs << ";\n";
  };
  for (const Edge& e : g.edges) {
    if (!subset.count(e.first) || !subset.count(e.second)) continue;
    if (deleted.count(e)) {
      emit(e, " [style=dotted, color=red]");
    } else {
      emit(e, "");
    }
  }
  for (const Edge& e : added) {
    if (!subset.count(e.first) || !subset.count(e.second)) continue;
    if (g.edges.count(e)) continue;
    emit(e, " [style=dashed, color=darkgreen]");
  }
  os << "}\n";
  return os.str();
}

}  // namespace graphedit
