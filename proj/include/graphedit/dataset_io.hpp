#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphedit/graph.hpp"

namespace graphedit {

struct DatasetManifest {
  std::string name;
  std::filesystem::path node_file;
  std::filesystem::path edge_file;
  std::vector<std::string> categories;
  std::optional<int> feature_dim;
};

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  m.node_file = path.parent_path() / j.at("node_file").get<std::string>();
  m.edge_file = path.parent_path() / j.at("edge_file").get<std::string>();
  m.categories = j.at("categories").get<std::vector<std::string>>();
  if (j.contains("feature_dim") && !j["feature_dim"].is_null()) {
    m.feature_dim = j["feature_dim"].get<int>();
  }
  if (m.categories.empty()) throw std::runtime_error("load_manifest: empty categories");
  return m;
}

/// Node file: JSON-lines {"id", "title", "abstract", "label"} with optional
/// "features". Edge file: "src<TAB>dst" pairs, '#' comments. Category order
/// comes from the manifest and defines class indices.
inline TextGraph load_dataset(const DatasetManifest& m) {
  std::map<std::string, int> cat_index;
  for (std::size_t c = 0; c < m.categories.size(); ++c) {
    cat_index[m.categories[c]] = static_cast<int>(c);
  }

  std::ifstream nodes_in(m.node_file);
  if (!nodes_in) throw std::runtime_error("load_dataset: cannot open " + m.node_file.string());
  std::vector<NodeRecord> nodes;
  std::string line;
  int lineno = 0;
  while (std::getline(nodes_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      NodeRecord n;
      n.id = j.at("id").get<int>();
      n.title = j.at("title").get<std::string>();
      n.abstract_text = j.at("abstract").get<std::string>();
      const auto label_text = j.at("label").get<std::string>();
      auto it = cat_index.find(label_text);
      if (it == cat_index.end()) {
        throw std::runtime_error("unknown label \"" + label_text + "\"");
      }
      n.label = it->second;
      if (j.contains("features")) n.features = j["features"].get<std::vector<double>>();
      n.token_count = static_cast<int>(tokenize(n.title + " " + n.abstract_text).size());
      nodes.push_back(std::move(n));
    } catch (const std::exception& e) {
      throw std::runtime_error("load_dataset: " + m.node_file.string() + " line " +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  // ids must be dense 0..N-1 in file order
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != static_cast<int>(i)) {
      throw std::runtime_error("load_dataset: node ids must be 0..N-1 in order; got id " +
                               std::to_string(nodes[i].id) + " at position " +
                               std::to_string(i));
    }
  }

  std::ifstream edges_in(m.edge_file);
  if (!edges_in) throw std::runtime_error("load_dataset: cannot open " + m.edge_file.string());
  std::vector<std::pair<int, int>> raw_edges;
  lineno = 0;
  while (std::getline(edges_in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int a = 0, b = 0;
    if (!(ls >> a >> b)) {
      throw std::runtime_error("load_dataset: " + m.edge_file.string() + " line " +
                               std::to_string(lineno) + ": malformed edge");
    }
    raw_edges.emplace_back(a, b);
  }
  return build_graph(std::move(nodes), raw_edges, m.categories);
}

/// Planted-partition generator with class-correlated node text.
struct SyntheticSpec {
  int n = 300;
  int num_classes = 3;
  double p_in = 0.05;
  double p_out = 0.02;
  int vocab_per_class = 60;
  int tokens_per_node = 40;
  int shared_vocab = 100;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(0.0 <= p_out && p_out < p_in && p_in <= 1.0)) {
      // p_in == p_out == 0 is the one degenerate case the tests use
      if (!(p_in == 0.0 && p_out == 0.0)) {
        throw std::invalid_argument("SyntheticSpec: need 0 <= p_out < p_in <= 1");
      }
    }
    if (n < num_classes) throw std::invalid_argument("SyntheticSpec: n < num_classes");
    if (tokens_per_node <= 0 || vocab_per_class <= 0 || shared_vocab <= 0) {
      throw std::invalid_argument("SyntheticSpec: token counts must be positive");
    }
  }
};

/// Nodes cycle through classes; each unordered pair is an edge independently
/// with p_in (same class) or p_out (otherwise). Node text mixes 70% class
/// vocabulary with 30% shared vocabulary; the title is the first 8 tokens.
inline TextGraph generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::string> categories;
  for (int c = 0; c < spec.num_classes; ++c) categories.push_back("Class " + std::to_string(c));

  std::vector<NodeRecord> nodes;
  nodes.reserve(static_cast<std::size_t>(spec.n));
  std::uniform_int_distribution<int> class_tok(0, spec.vocab_per_class - 1);
  std::uniform_int_distribution<int> shared_tok(0, spec.shared_vocab - 1);
  for (int i = 0; i < spec.n; ++i) {
    NodeRecord n;
    n.id = i;
    n.label = i % spec.num_classes;
    std::vector<std::string> toks;
    toks.reserve(static_cast<std::size_t>(spec.tokens_per_node));
    for (int t = 0; t < spec.tokens_per_node; ++t) {
      if (unit(rng) < 0.7) {
        toks.push_back("c" + std::to_string(n.label) + "w" + std::to_string(class_tok(rng)));
      } else {
        toks.push_back("shared" + std::to_string(shared_tok(rng)));
      }
    }
    std::ostringstream title, abstract;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      std::ostringstream& dst = (t < 8) ? title : abstract;
      if ((t < 8 && t > 0) || t > 8) dst << ' ';
      dst << toks[t];
    }
    n.title = title.str();
    n.abstract_text = abstract.str();
    n.token_count = spec.tokens_per_node;
    nodes.push_back(std::move(n));
  }

  std::vector<std::pair<int, int>> raw_edges;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      const double p = (nodes[static_cast<std::size_t>(i)].label ==
                        nodes[static_cast<std::size_t>(j)].label)
                           ? spec.p_in
                           : spec.p_out;
      if (unit(rng) < p) raw_edges.emplace_back(i, j);
    }
  }
  return build_graph(std::move(nodes), raw_edges, categories);
}

/// Writes nodes.jsonl, edges.tsv, manifest.json under `dir`.
inline void save_graph(const TextGraph& g, const std::filesystem::path& dir,
                       const std::string& name = "graph") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto node_path = dir / "nodes.jsonl";
  const auto edge_path = dir / "edges.tsv";
  std::ofstream nodes_out(node_path);
  if (!nodes_out) throw std::runtime_error("save_graph: cannot write " + node_path.string());
  for (const NodeRecord& n : g.nodes) {
    nlohmann::json j{{"id", n.id},
                     {"title", n.title},
                     {"abstract", n.abstract_text},
                     {"label", g.category_names[static_cast<std::size_t>(n.label)]}};
    if (!n.features.empty()) j["features"] = n.features;
    nodes_out << j.dump() << '\n';
  }
  std::ofstream edges_out(edge_path);
  if (!edges_out) throw std::runtime_error("save_graph: cannot write " + edge_path.string());
  edges_out << "# src\tdst\n";
  for (const Edge& e : g.edges) edges_out << e.first << '\t' << e.second << '\n';

  nlohmann::json manifest{{"name", name},
                          {"node_file", "nodes.jsonl"},
                          {"edge_file", "edges.tsv"},
                          {"categories", g.category_names}};
  if (!g.nodes.empty() && !g.nodes[0].features.empty()) {
    manifest["feature_dim"] = static_cast<int>(g.nodes[0].features.size());
  }
  std::ofstream manifest_out(dir / "manifest.json");
  if (!manifest_out) {
    throw std::runtime_error("save_graph: cannot write " + (dir / "manifest.json").string());
  }
  manifest_out << manifest.dump(2) << '\n';
}

inline TextGraph load_graph(const std::filesystem::path& dir) {
  return load_dataset(load_manifest(dir / "manifest.json"));
}

}  // namespace graphedit
