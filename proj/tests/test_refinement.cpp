#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "graphedit/dataset_io.hpp"
#include "graphedit/refinement.hpp"
#include "helpers.hpp"

using namespace graphedit;
namespace fs = std::filesystem;

namespace {

CandidateSet hand_candidates(int n, std::vector<std::tuple<int, int, double>> entries) {
  CandidateSet c;
  c.k = 1;
  c.per_node.resize(static_cast<std::size_t>(n));
  for (const auto& [i, j, s] : entries) {
    c.per_node[static_cast<std::size_t>(i)].emplace_back(j, s);
    c.k = std::max(c.k, static_cast<int>(c.per_node[static_cast<std::size_t>(i)].size()));
  }
  return c;
}

std::set<Edge> as_set(const std::vector<Edge>& edges) {
  return {edges.begin(), edges.end()};
}

}  // namespace

TEST_CASE("mode names round-trip") {
  for (auto m : {RefinementMode::Full, RefinementMode::NoAdd, RefinementMode::NoDel,
                 RefinementMode::ConstructOnly}) {
    REQUIRE(parse_mode(to_string(m)) == m);
  }
  REQUIRE_THROWS(parse_mode("sideways"));
}

TEST_CASE("assemble_candidate_pool per mode") {
  auto g = test_helpers::random_graph(6, 0.0, 0);
  g.edges = {{0, 1}, {2, 3}};
  // candidates: (0,1) duplicates an original; (1,4) and (4,5) are new
  const auto cands = hand_candidates(6, {{0, 1, 0.9}, {1, 4, 0.8}, {5, 4, 0.7}});

  SECTION("Full merges originals and candidates, deduped") {
    const auto pool = assemble_candidate_pool(g, cands, RefinementMode::Full);
    REQUIRE(as_set(pool.screen_set) ==
            std::set<Edge>{{0, 1}, {1, 4}, {2, 3}, {4, 5}});
    REQUIRE(pool.keep_unconditionally.empty());
  }
  SECTION("NoAdd screens only the originals") {
    const auto pool = assemble_candidate_pool(g, cands, RefinementMode::NoAdd);
    REQUIRE(as_set(pool.screen_set) == g.edges);
    REQUIRE(pool.keep_unconditionally.empty());
  }
  SECTION("NoDel keeps originals unconditionally, screens new candidates only") {
    const auto pool = assemble_candidate_pool(g, cands, RefinementMode::NoDel);
    REQUIRE(as_set(pool.screen_set) == std::set<Edge>{{1, 4}, {4, 5}});
    REQUIRE(as_set(pool.keep_unconditionally) == g.edges);
  }
  SECTION("ConstructOnly screens candidates alone") {
    const auto pool = assemble_candidate_pool(g, cands, RefinementMode::ConstructOnly);
    REQUIRE(as_set(pool.screen_set) == std::set<Edge>{{0, 1}, {1, 4}, {4, 5}});
    REQUIRE(pool.keep_unconditionally.empty());
  }
  SECTION("empty candidate set in ConstructOnly gives an empty screen set") {
    const auto pool = assemble_candidate_pool(g, hand_candidates(6, {}),
                                              RefinementMode::ConstructOnly);
    REQUIRE(pool.screen_set.empty());
  }
  SECTION("out-of-range candidate endpoint rejected") {
    REQUIRE_THROWS(assemble_candidate_pool(g, hand_candidates(6, {{0, 9, 0.5}}),
                                           RefinementMode::Full));
  }
}

TEST_CASE("all-True backend keeps the whole pool") {
  auto g = test_helpers::random_graph(8, 0.3, 2);
  const auto cands = hand_candidates(8, {{0, 7, 0.9}, {2, 6, 0.8}});
  const auto pool = assemble_candidate_pool(g, cands, RefinementMode::Full);
  ConstantBackend backend("True");
  const auto r = refine(g, pool, backend);
  REQUIRE(r.edges == as_set(pool.screen_set));  // A_hat == A'
  REQUIRE(r.deleted_originals.empty());
  for (const Edge& e : g.edges) {
    REQUIRE(r.provenance.at(e) == EdgeProvenance::KeptOriginal);
  }
  REQUIRE(r.verdict_log.size() == pool.screen_set.size());
}

TEST_CASE("all-False backend empties Full mode but leaves NoDel untouched") {
  auto g = test_helpers::random_graph(8, 0.4, 3);
  const auto cands = hand_candidates(8, {{0, 7, 0.9}});
  ConstantBackend backend("False");
  SECTION("Full mode deletes everything") {
    const auto pool = assemble_candidate_pool(g, cands, RefinementMode::Full);
    const auto r = refine(g, pool, backend);
    REQUIRE(r.edges.empty());
    REQUIRE(r.deleted_originals == g.edges);
  }
  SECTION("NoDel mode returns the original graph") {
    const auto pool = assemble_candidate_pool(g, cands, RefinementMode::NoDel);
    const auto r = refine(g, pool, backend);
    REQUIRE(r.edges == g.edges);
    REQUIRE(r.deleted_originals.empty());
    REQUIRE(r.apply_to(g).edges == g.edges);
  }
}

TEST_CASE("perfect oracle leaves no inter-class screened edge in any mode") {
  const auto g = generate_synthetic(test_helpers::default_sbm(21));
  OracleBackend backend({});
  const auto cands = hand_candidates(
      g.num_nodes(), {{0, 3, 0.9}, {0, 1, 0.8}, {5, 100, 0.7}, {2, 200, 0.6}});
  for (auto mode : {RefinementMode::Full, RefinementMode::ConstructOnly}) {
    const auto pool = assemble_candidate_pool(g, cands, mode);
    const auto r = refine(g, pool, backend, 4);
    for (const Edge& e : r.edges) {
      REQUIRE(g.nodes[static_cast<std::size_t>(e.first)].label ==
              g.nodes[static_cast<std::size_t>(e.second)].label);
    }
  }
}

TEST_CASE("conservation: kept + deleted = screened originals; A_hat subset of A'") {
  const auto g = generate_synthetic(test_helpers::default_sbm(22));
  OracleConfig ocfg;
  ocfg.flip_rate = 0.3;
  ocfg.seed = 9;
  OracleBackend backend(ocfg);
  std::mt19937_64 rng(5);
  std::vector<std::tuple<int, int, double>> entries;
  for (int t = 0; t < 50; ++t) {
    const int i = static_cast<int>(rng() % g.num_nodes());
    const int j = static_cast<int>(rng() % g.num_nodes());
    if (i != j) entries.emplace_back(i, j, 0.5);
  }
  const auto cands = hand_candidates(g.num_nodes(), entries);
  const auto pool = assemble_candidate_pool(g, cands, RefinementMode::Full);
  const auto r = refine(g, pool, backend, 4);

  std::size_t kept_originals = 0;
  for (const auto& [edge, prov] : r.provenance) {
    if (prov == EdgeProvenance::KeptOriginal) ++kept_originals;
    REQUIRE(as_set(pool.screen_set).count(edge) == 1);  // A_hat subset of A'
  }
  for (const Edge& e : g.edges) {
    const bool kept = r.edges.count(e) > 0;
    const bool deleted = r.deleted_originals.count(e) > 0;
    REQUIRE(kept != deleted);  // exactly one of the two
  }
  REQUIRE(kept_originals + r.deleted_originals.size() == g.edges.size());
}

TEST_CASE("refinement is deterministic regardless of parallelism") {
  const auto g = generate_synthetic(test_helpers::default_sbm(23));
  OracleConfig ocfg;
  ocfg.flip_rate = 0.2;
  ocfg.seed = 4;
  OracleBackend backend(ocfg);
  std::vector<std::tuple<int, int, double>> entries;
  std::mt19937_64 rng(6);
  for (int t = 0; t < 80; ++t) {
    const int i = static_cast<int>(rng() % g.num_nodes());
    const int j = static_cast<int>(rng() % g.num_nodes());
    if (i != j) entries.emplace_back(i, j, 0.5);
  }
  const auto pool = assemble_candidate_pool(g, hand_candidates(g.num_nodes(), entries),
                                            RefinementMode::Full);
  const auto serial = refine(g, pool, backend, 1);
  const auto wide = refine(g, pool, backend, 8);
  REQUIRE(serial.edges == wide.edges);
  REQUIRE(serial.deleted_originals == wide.deleted_originals);
  REQUIRE(serial.provenance == wide.provenance);
}

TEST_CASE("backend abort never yields a partial refined graph") {
  struct DyingBackend final : VerdictBackend {
    std::atomic<int> calls{0};
    std::string complete(const TextGraph& g, int i, int j,
                         const std::string&) override {
      if (calls.fetch_add(1) >= 5) throw std::runtime_error("gone");
      return oracle_answer(g, i, j, {});
    }
  };
  const auto g = generate_synthetic(test_helpers::default_sbm(24));
  const auto pool = assemble_candidate_pool(g, hand_candidates(g.num_nodes(), {}),
                                            RefinementMode::NoAdd);
  DyingBackend backend;
  REQUIRE_THROWS_AS(refine(g, pool, backend, 1, 0), BackendError);
}

TEST_CASE("verdict cache short-circuits repeat queries and survives reload") {
  const auto g = generate_synthetic(test_helpers::default_sbm(25));
  const auto pool = assemble_candidate_pool(g, hand_candidates(g.num_nodes(), {}),
                                            RefinementMode::NoAdd);
  struct CountingBackend final : VerdictBackend {
    std::atomic<int> calls{0};
    std::string complete(const TextGraph& g, int i, int j,
                         const std::string&) override {
      calls.fetch_add(1);
      return oracle_answer(g, i, j, {});
    }
  };
  const auto path = fs::temp_directory_path() / "graphedit_vcache_test.jsonl";
  fs::remove(path);

  CountingBackend backend;
  VerdictCache cache(path);
  const auto first = refine(g, pool, backend, 2, 2, &cache);
  const int calls_first = backend.calls.load();
  REQUIRE(calls_first == static_cast<int>(pool.screen_set.size()));
  REQUIRE(cache.size() == pool.screen_set.size());

  const auto second = refine(g, pool, backend, 2, 2, &cache);
  REQUIRE(backend.calls.load() == calls_first);  // all hits
  REQUIRE(second.edges == first.edges);
  REQUIRE(second.deleted_originals == first.deleted_originals);

  VerdictCache reloaded(path);  // fresh object, same file
  REQUIRE(reloaded.size() == pool.screen_set.size());
  const auto third = refine(g, pool, backend, 2, 2, &reloaded);
  REQUIRE(backend.calls.load() == calls_first);
  REQUIRE(third.edges == first.edges);
  fs::remove(path);
}

TEST_CASE("refinement_report identities") {
  const auto g = generate_synthetic(test_helpers::default_sbm(26));
  OracleBackend backend({});
  SECTION("NoAdd with no candidates adds nothing; kept + deleted = originals") {
    const auto pool = assemble_candidate_pool(g, hand_candidates(g.num_nodes(), {}),
                                              RefinementMode::NoAdd);
    const auto r = refine(g, pool, backend, 4);
    const auto rep = refinement_report(r, g);
    REQUIRE(rep.added_candidates == 0);
    REQUIRE(rep.kept_originals + rep.deleted_originals == g.edges.size());
    REQUIRE(rep.intra_fraction_after == 1.0);  // perfect oracle kept only intra
    REQUIRE(rep.intra_fraction_before < 1.0);  // SBM has inter-class edges
  }
  SECTION("perfect oracle deletes every screened inter-class original") {
    const auto pool = assemble_candidate_pool(g, hand_candidates(g.num_nodes(), {}),
                                              RefinementMode::Full);
    const auto r = refine(g, pool, backend, 4);
    for (const Edge& e : g.edges) {
      const bool intra = g.nodes[static_cast<std::size_t>(e.first)].label ==
                         g.nodes[static_cast<std::size_t>(e.second)].label;
      REQUIRE(r.deleted_originals.count(e) == (intra ? 0u : 1u));
    }
  }
}

TEST_CASE("save_refined writes the TSV and sidecar") {
  const auto dir = fs::temp_directory_path() / "graphedit_refined_test";
  fs::remove_all(dir);
  const auto g = generate_synthetic(test_helpers::default_sbm(27));
  OracleBackend backend({});
  const auto cands = hand_candidates(g.num_nodes(), {{0, 3, 0.9}});
  const auto pool = assemble_candidate_pool(g, cands, RefinementMode::Full);
  const auto r = refine(g, pool, backend, 4);
  save_refined(r, g, dir);

  std::ifstream tsv(dir / "refined_edges.tsv");
  std::string line;
  std::getline(tsv, line);
  REQUIRE(line == "# src\tdst");
  std::size_t rows = 0;
  while (std::getline(tsv, line)) ++rows;
  REQUIRE(rows == r.edges.size());

  nlohmann::json side;
  std::ifstream(dir / "refined_meta.json") >> side;
  REQUIRE(side.at("deleted_originals").size() == r.deleted_originals.size());
  REQUIRE(side.at("verdicts").at("total") == r.verdict_log.size());
  REQUIRE(side.at("report").contains("intra_fraction_after"));
  fs::remove_all(dir);
}

TEST_CASE("refined graphs render with added and deleted edge styles") {
  auto g = test_helpers::random_graph(5, 0.0, 1);
  g.edges = {{0, 1}, {1, 2}};
  RefinedGraph r;
  r.edges = {{0, 1}, {3, 4}};
  r.provenance[{0, 1}] = EdgeProvenance::KeptOriginal;
  r.provenance[{3, 4}] = EdgeProvenance::AddedCandidate;
  r.deleted_originals = {{1, 2}};
  const auto dot = to_dot(g, {0, 1, 2, 3, 4}, r);
  REQUIRE(dot.find("style=dashed, color=darkgreen") != std::string::npos);
  REQUIRE(dot.find("style=dotted, color=red") != std::string::npos);
}
