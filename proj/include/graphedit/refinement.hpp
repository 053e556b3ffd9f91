#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphedit/edge_predictor.hpp"
#include "graphedit/graph.hpp"
#include "graphedit/llm_gateway.hpp"

namespace graphedit {

enum class RefinementMode { Full, NoAdd, NoDel, ConstructOnly };

inline std::string to_string(RefinementMode m) {
  switch (m) {
    case RefinementMode::Full: return "full";
    case RefinementMode::NoAdd: return "no-add";
    case RefinementMode::NoDel: return "no-del";
    case RefinementMode::ConstructOnly: return "construct-only";
  }
  throw std::logic_error("unknown RefinementMode");
}

inline RefinementMode parse_mode(const std::string& s) {
  if (s == "full") return RefinementMode::Full;
  if (s == "no-add") return RefinementMode::NoAdd;
  if (s == "no-del") return RefinementMode::NoDel;
  if (s == "construct-only") return RefinementMode::ConstructOnly;
  throw std::invalid_argument("unknown refinement mode \"" + s + "\"");
}

enum class EdgeProvenance { KeptOriginal, AddedCandidate };

struct CandidatePool {
  std::vector<Edge> screen_set;           // edges the backend will judge
  std::vector<Edge> keep_unconditionally;  // edges that bypass screening
};

/// Combines candidate edges with the original edge set per mode. Candidates
/// that duplicate originals are screened once, credited as originals.
inline CandidatePool assemble_candidate_pool(const TextGraph& g, const CandidateSet& cands,
                                             RefinementMode mode) {
  std::set<Edge> candidate_edges;
  for (std::size_t i = 0; i < cands.per_node.size(); ++i) {
    for (const auto& [j, score] : cands.per_node[i]) {
      if (j < 0 || j >= g.num_nodes() || static_cast<int>(i) >= g.num_nodes()) {
        throw std::invalid_argument("assemble_candidate_pool: candidate endpoint out of range");
      }
      candidate_edges.insert(make_edge(static_cast<int>(i), j));
    }
  }

  CandidatePool pool;
  switch (mode) {
    case RefinementMode::Full: {
      std::set<Edge> merged = g.edges;
      merged.insert(candidate_edges.begin(), candidate_edges.end());
      pool.screen_set.assign(merged.begin(), merged.end());
      break;
    }
    case RefinementMode::NoAdd:
      pool.screen_set.assign(g.edges.begin(), g.edges.end());
      break;
    case RefinementMode::NoDel:
      for (const Edge& e : candidate_edges) {
        if (!g.edges.count(e)) pool.screen_set.push_back(e);
      }
      pool.keep_unconditionally.assign(g.edges.begin(), g.edges.end());
      break;
    case RefinementMode::ConstructOnly:
      pool.screen_set.assign(candidate_edges.begin(), candidate_edges.end());
      break;
  }
  return pool;
}

/// Edge set after screening, with per-edge provenance and the full verdict
/// log.
struct RefinedGraph {
  std::set<Edge> edges;
  std::map<Edge, EdgeProvenance> provenance;
  std::set<Edge> deleted_originals;
  std::vector<EdgeVerdict> verdict_log;
  std::size_t parse_defaulted = 0;

  TextGraph apply_to(const TextGraph& g) const {
    TextGraph out = g;
    out.edges = edges;
    return out;
  }
};

/// Append-only verdict cache keyed by "(min,max)"; makes re-runs against a
/// slow backend cheap.
class VerdictCache {
 public:
  explicit VerdictCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line);
      EdgeVerdict v;
      v.edge = make_edge(j.at("i").get<int>(), j.at("j").get<int>());
      v.same_category = j.at("same").get<bool>();
      if (j.contains("category") && !j["category"].is_null()) {
        v.category = j["category"].get<int>();
      }
      v.raw_response = j.at("raw").get<std::string>();
      entries_[v.edge] = std::move(v);
    }
  }

  const EdgeVerdict* find(const Edge& e) const {
    auto it = entries_.find(e);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void insert(const EdgeVerdict& v) {
    if (entries_.count(v.edge)) return;
    entries_[v.edge] = v;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw std::runtime_error("VerdictCache: cannot append to " + path_.string());
    nlohmann::json j{{"i", v.edge.first},
                     {"j", v.edge.second},
                     {"same", v.same_category},
                     {"raw", v.raw_response}};
    if (v.category) j["category"] = *v.category;
    out << j.dump() << '\n';
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path path_;
  std::map<Edge, EdgeVerdict> entries_;
};

/// Screens the pool through the backend. Edges with a "true" verdict are
/// retained; rejected originals land in deleted_originals. The operation is
/// atomic: a backend abort yields no partial RefinedGraph.
inline RefinedGraph refine(const TextGraph& g, const CandidatePool& pool,
                           VerdictBackend& backend, int parallelism = 1, int retries = 2,
                           VerdictCache* cache = nullptr, bool include_category = true) {
  std::vector<Edge> to_query;
  std::vector<EdgeVerdict> cached;
  if (cache) {
    for (const Edge& e : pool.screen_set) {
      if (const EdgeVerdict* v = cache->find(e)) {
        cached.push_back(*v);
      } else {
        to_query.push_back(e);
      }
    }
  } else {
    to_query = pool.screen_set;
  }

  VerdictBatch batch =
      query_verdicts(g, to_query, backend, parallelism, retries, include_category);
  if (cache) {
    for (const EdgeVerdict& v : batch.verdicts) cache->insert(v);
    batch.verdicts.insert(batch.verdicts.end(), cached.begin(), cached.end());
  }

  RefinedGraph r;
  r.parse_defaulted = batch.parse_defaulted;
  for (const EdgeVerdict& v : batch.verdicts) {
    const bool is_original = g.edges.count(v.edge) > 0;
    if (v.same_category) {
      r.edges.insert(v.edge);
      r.provenance[v.edge] =
          is_original ? EdgeProvenance::KeptOriginal : EdgeProvenance::AddedCandidate;
    } else if (is_original) {
      r.deleted_originals.insert(v.edge);
    }
    r.verdict_log.push_back(v);
  }
  for (const Edge& e : pool.keep_unconditionally) {
    r.edges.insert(e);
    r.provenance[e] = EdgeProvenance::KeptOriginal;
  }
  return r;
}

struct RefinementReport {
  std::size_t kept_originals = 0;
  std::size_t deleted_originals = 0;
  std::size_t added_candidates = 0;
  double intra_fraction_before = 0.0;
  double intra_fraction_after = 0.0;
};

/// Labels are used for reporting only.
inline RefinementReport refinement_report(const RefinedGraph& r, const TextGraph& g) {
  RefinementReport rep;
  for (const auto& [edge, prov] : r.provenance) {
    if (prov == EdgeProvenance::KeptOriginal) {
      ++rep.kept_originals;
    } else {
      ++rep.added_candidates;
    }
  }
  rep.deleted_originals = r.deleted_originals.size();
  auto intra_fraction = [&](const std::set<Edge>& edges) {
    if (edges.empty()) return 0.0;
    std::size_t intra = 0;
    for (const Edge& e : edges) {
      if (g.nodes[static_cast<std::size_t>(e.first)].label ==
          g.nodes[static_cast<std::size_t>(e.second)].label) {
        ++intra;
      }
    }
    return static_cast<double>(intra) / static_cast<double>(edges.size());
  };
  rep.intra_fraction_before = intra_fraction(g.edges);
  rep.intra_fraction_after = intra_fraction(r.edges);
  return rep;
}

inline nlohmann::json report_to_json(const RefinementReport& r) {
  return {{"kept_originals", r.kept_originals},
          {"deleted_originals", r.deleted_originals},
          {"added_candidates", r.added_candidates},
          {"intra_fraction_before", r.intra_fraction_before},
          {"intra_fraction_after", r.intra_fraction_after}};
}

/// Edge TSV (dataset-io schema) plus a JSON sidecar with provenance,
/// deletions, and verdict statistics.
inline void save_refined(const RefinedGraph& r, const TextGraph& g,
                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream edges_out(dir / "refined_edges.tsv");
  if (!edges_out) {
    throw std::runtime_error("save_refined: cannot write " +
                             (dir / "refined_edges.tsv").string());
  }
  edges_out << "# src\tdst\n";
  for (const Edge& e : r.edges) edges_out << e.first << '\t' << e.second << '\n';

  nlohmann::json side;
  nlohmann::json added = nlohmann::json::array();
  nlohmann::json kept = nlohmann::json::array();
  for (const auto& [edge, prov] : r.provenance) {
    nlohmann::json e{edge.first, edge.second};
    (prov == EdgeProvenance::AddedCandidate ? added : kept).push_back(e);
  }
  nlohmann::json deleted = nlohmann::json::array();
  for (const Edge& e : r.deleted_originals) deleted.push_back({e.first, e.second});
  side["kept_originals"] = kept;
  side["added_candidates"] = added;
  side["deleted_originals"] = deleted;
  side["verdicts"] = {{"total", r.verdict_log.size()},
                      {"parse_defaulted", r.parse_defaulted}};
  side["report"] = report_to_json(refinement_report(r, g));
  std::ofstream side_out(dir / "refined_meta.json");
  side_out << side.dump(2) << '\n';
}

inline std::string to_dot(const TextGraph& g, const std::set<int>& subset,
                          const RefinedGraph& r) {
  std::set<Edge> added;
  for (const auto& [edge, prov] : r.provenance) {
    if (prov == EdgeProvenance::AddedCandidate) added.insert(edge);
  }
  return to_dot(g, subset, added, r.deleted_originals);
}

}  // namespace graphedit
