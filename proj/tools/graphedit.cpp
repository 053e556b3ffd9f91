// Command-line front end for the graph refinement pipeline. Each subcommand
// wraps one pipeline stage and exchanges artifacts through the output
// directory, so an externally tuned LLM can be slotted in between
// export-instructions and refine.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "graphedit/http.hpp"
#include "graphedit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace graphedit;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> backend;
  std::optional<std::string> mode;
  std::optional<int> k;
  std::optional<int> repeats;
};

ExperimentConfig effective_config(const GlobalOpts& g) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.out_dir = *g.out;
  if (g.backend) cfg.backend.kind = *g.backend;
  if (g.mode) cfg.mode = parse_mode(*g.mode);
  if (g.k) cfg.k = *g.k;
  if (g.repeats) cfg.repeats = *g.repeats;
  return cfg;
}

std::unique_ptr<VerdictBackend> cli_backend(const ExperimentConfig& cfg) {
  if (cfg.backend.kind == "http") {
    HttpConfig http = http_config_from_env(cfg.backend.url);
    if (http.url.empty()) {
      throw std::runtime_error(
          "http backend selected but no URL: set GRAPHEDIT_BACKEND_URL or backend.url");
    }
    return std::make_unique<HttpVerdictBackend>(http);
  }
  return make_backend(cfg.backend);
}

std::unique_ptr<EmbeddingProvider> cli_provider(const ExperimentConfig& cfg) {
  if (cfg.embedding.provider == "http") {
    HttpConfig http = http_config_from_env(cfg.embedding.url);
    if (http.url.empty()) {
      throw std::runtime_error(
          "http embedding provider selected but no URL configured");
    }
    return std::make_unique<HttpEmbeddingProvider>(http, cfg.embedding.dim);
  }
  return make_embedding_provider(cfg.embedding);
}

void save_split(const NodeSplit& s, const fs::path& path) {
  nlohmann::json j{{"train", s.train}, {"valid", s.valid}, {"test", s.test}};
  std::ofstream out(path);
  out << j.dump() << '\n';
}

NodeSplit load_split(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open split file " + path.string());
  nlohmann::json j;
  in >> j;
  NodeSplit s;
  s.train = j.at("train").get<std::vector<int>>();
  s.valid = j.at("valid").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  return s;
}

void save_pairs(const std::vector<PairSample>& pairs, const fs::path& path) {
  std::ofstream out(path);
  for (const PairSample& p : pairs) {
    nlohmann::json j{{"i", p.i}, {"j", p.j}, {"y", p.y}, {"ci", p.ci}, {"cj", p.cj}};
    out << j.dump() << '\n';
  }
}

std::vector<PairSample> load_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pairs file " + path.string());
  std::vector<PairSample> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    pairs.push_back({j.at("i").get<int>(), j.at("j").get<int>(), j.at("y").get<int>(),
                     j.at("ci").get<int>(), j.at("cj").get<int>()});
  }
  return pairs;
}

TextGraph load_stage_graph(const ExperimentConfig& cfg) {
  const fs::path dir = fs::path(cfg.out_dir) / "graph";
  if (!fs::exists(dir / "manifest.json")) {
    throw std::runtime_error("no graph at " + dir.string() + "; run synth or load first");
  }
  return load_graph(dir);
}

std::vector<int> graph_labels(const TextGraph& g) {
  std::vector<int> labels(static_cast<std::size_t>(g.num_nodes()));
  for (int i = 0; i < g.num_nodes(); ++i) {
    labels[static_cast<std::size_t>(i)] = g.nodes[static_cast<std::size_t>(i)].label;
  }
  return labels;
}

EmbeddingMatrix stage_embeddings(const ExperimentConfig& cfg, const TextGraph& g) {
  const fs::path path = fs::path(cfg.out_dir) / "embeddings.bin";
  if (fs::exists(path)) return load_embeddings(path);
  auto provider = cli_provider(cfg);
  return embed_nodes(g, *provider);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GraphEdit-style graph structure refinement pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment configuration file (JSON)");
  app.add_option("--seed", g.seed, "base seed override");
  app.add_option("--out", g.out, "output directory override");
  app.add_option("--backend", g.backend, "verdict backend kind: oracle|http|constant");
  app.add_option("--mode", g.mode, "refinement mode: full|no-add|no-del|construct-only");
  app.add_option("--k", g.k, "candidate edges per node");
  app.add_option("--repeats", g.repeats, "classifier repeats");

  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic planted-partition graph");
  auto* cmd_load = app.add_subcommand("load", "load a dataset from its manifest");
  std::string manifest_arg;
  cmd_load->add_option("manifest", manifest_arg, "dataset manifest path");
  auto* cmd_split = app.add_subcommand("split", "split nodes into train/valid/test");
  auto* cmd_pairs = app.add_subcommand("sample-pairs", "sample and label training pairs");
  auto* cmd_export =
      app.add_subcommand("export-instructions", "write the instruction-tuning JSONL");
  auto* cmd_embed = app.add_subcommand("embed", "compute node embeddings");
  auto* cmd_train_ep =
      app.add_subcommand("train-edge-predictor", "train the pair scorer");
  auto* cmd_cands = app.add_subcommand("candidates", "emit top-k candidate edges");
  auto* cmd_refine = app.add_subcommand("refine", "screen edges through the backend");
  auto* cmd_gcn = app.add_subcommand("train-gcn", "train the node classifier");
  bool gcn_on_refined = false;
  cmd_gcn->add_flag("--refined", gcn_on_refined, "use the refined edge set");
  auto* cmd_mlp = app.add_subcommand("train-mlp", "train the structure-free baseline");
  auto* cmd_run = app.add_subcommand("run-all", "run the whole experiment");
  auto* cmd_sweep_k = app.add_subcommand("sweep-k", "run-all across k values");
  std::vector<int> k_values{1, 2, 3, 4, 5};
  cmd_sweep_k->add_option("--k-values", k_values, "k values to sweep");
  auto* cmd_sweep_noise = app.add_subcommand("sweep-noise", "run-all across noise rates");
  std::vector<double> rates{0.05, 0.1, 0.15, 0.2, 0.25};
  cmd_sweep_noise->add_option("--rates", rates, "noise rates to sweep");
  auto* cmd_report = app.add_subcommand("report", "summarize a result.json");
  std::string report_path;
  cmd_report->add_option("result", report_path, "result.json path");
  auto* cmd_dot = app.add_subcommand("to-dot", "export a node sample as DOT");
  int dot_nodes = 20;
  bool dot_refined = false;
  cmd_dot->add_option("--nodes", dot_nodes, "sample size");
  cmd_dot->add_flag("--refined", dot_refined, "overlay refinement provenance");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = effective_config(g);
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);

    if (cmd_synth->parsed()) {
      const TextGraph graph = generate_synthetic(cfg.synthetic);
      save_graph(graph, out / "graph", "synthetic");
      const GraphStats s = graph_stats(graph);
      std::cout << "generated " << s.num_nodes << " nodes, " << s.num_edges
                << " edges (" << s.num_directed_edges << " directed), "
                << s.num_classes << " classes\n";
    } else if (cmd_load->parsed()) {
      const std::string manifest =
          manifest_arg.empty() ? cfg.dataset_manifest : manifest_arg;
      if (manifest.empty()) throw std::runtime_error("load: no manifest given");
      TextGraph graph = load_dataset(load_manifest(manifest));
      if (cfg.noise_rate > 0.0) graph = inject_noise(graph, cfg.noise_rate, cfg.noise_seed);
      save_graph(graph, out / "graph");
      const GraphStats s = graph_stats(graph);
      std::cout << "loaded " << s.num_nodes << " nodes, " << s.num_edges << " edges ("
                << s.num_directed_edges << " directed), " << s.num_classes
                << " classes\n";
    } else if (cmd_split->parsed()) {
      const TextGraph graph = load_stage_graph(cfg);
      const NodeSplit split = split_nodes(graph, cfg.train_ratio, cfg.valid_ratio,
                                          cfg.test_ratio, cfg.seed);
      save_split(split, out / "split.json");
      std::cout << "split " << split.train.size() << '/' << split.valid.size() << '/'
                << split.test.size() << '\n';
    } else if (cmd_pairs->parsed()) {
      const TextGraph graph = load_stage_graph(cfg);
      const NodeSplit split = load_split(out / "split.json");
      const auto pairs =
          label_pairs(sample_pairs(split.train, cfg.pair_count, cfg.seed ^ 0xa5a5u), graph);
      save_pairs(pairs, out / "pairs.jsonl");
      std::size_t pos = 0;
      for (const PairSample& p : pairs) pos += static_cast<std::size_t>(p.y);
      std::cout << pairs.size() << " pairs, " << pos << " positive\n";
    } else if (cmd_export->parsed()) {
      const TextGraph graph = load_stage_graph(cfg);
      const auto pairs = load_pairs(out / "pairs.jsonl");
      export_instruction_dataset(graph, pairs, out / "instructions.jsonl",
                                 cfg.prompt_with_category);
      std::cout << "wrote " << pairs.size() << " instruction lines\n";
    } else if (cmd_embed->parsed()) {
      const TextGraph graph = load_stage_graph(cfg);
      auto provider = cli_provider(cfg);
      const EmbeddingMatrix emb = embed_nodes(graph, *provider);
      save_embeddings(emb, out / "embeddings.bin");
      std::cout << "embedded " << emb.vectors.rows() << " nodes, d=" << emb.dim << '\n';
    } else if (cmd_train_ep->parsed()) {
      const EmbeddingMatrix emb = load_embeddings(out / "embeddings.bin");
      const auto pairs = load_pairs(out / "pairs.jsonl");
      const auto trained = train_edge_predictor(emb, pairs, cfg.predictor);
      save_edge_predictor(trained.model, out / "model.json");
      std::cout << "final train loss " << trained.final_loss << '\n';
    } else if (cmd_cands->parsed()) {
      const EmbeddingMatrix emb = load_embeddings(out / "embeddings.bin");
      const EdgePredictorModel model = load_edge_predictor(out / "model.json");
      const CandidateSet cands = top_k_candidates(model, emb, cfg.k);
      save_candidates(cands, out / "candidates.tsv");
      std::cout << "wrote top-" << cfg.k << " candidates\n";
    } else if (cmd_refine->parsed()) {
      const TextGraph graph = load_stage_graph(cfg);
      const CandidateSet cands =
          load_candidates(out / "candidates.tsv", graph.num_nodes());
      const CandidatePool pool = assemble_candidate_pool(graph, cands, cfg.mode);
      auto backend = cli_backend(cfg);
      std::unique_ptr<VerdictCache> vcache;
      if (cfg.use_cache && cfg.backend.kind == "http") {
        vcache = std::make_unique<VerdictCache>(out / "verdict_cache.jsonl");
      }
      const RefinedGraph refined =
          refine(graph, pool, *backend, cfg.parallelism, cfg.verdict_retries,
                 vcache.get(), cfg.prompt_with_category);
      save_refined(refined, graph, out / "refined");
      const RefinementReport rep = refinement_report(refined, graph);
      std::cout << "kept " << rep.kept_originals << ", deleted " << rep.deleted_originals
                << ", added " << rep.added_candidates << "; intra fraction "
                << rep.intra_fraction_before << " -> " << rep.intra_fraction_after
                << '\n';
    } else if (cmd_gcn->parsed() || cmd_mlp->parsed()) {
      TextGraph graph = load_stage_graph(cfg);
      if (gcn_on_refined) {
        const fs::path edges = out / "refined" / "refined_edges.tsv";
        std::ifstream in(edges);
        if (!in) throw std::runtime_error("no refined edges at " + edges.string());
        graph.edges.clear();
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#') continue;
          std::istringstream ls(line);
          int a = 0, b = 0;
          ls >> a >> b;
          graph.edges.insert(make_edge(a, b));
        }
      }
      const NodeSplit split = load_split(out / "split.json");
      const EmbeddingMatrix emb = stage_embeddings(cfg, graph);
      const auto labels = graph_labels(graph);
      GcnConfig gcn_cfg = cfg.gcn;
      gcn_cfg.seed = cfg.seed;
      TrainReport rep;
      if (cmd_gcn->parsed()) {
        const NormalizedAdjacency a = normalize_adjacency(graph);
        rep = train_gcn(a, emb.vectors, labels, split, gcn_cfg, graph.num_classes).second;
      } else {
        rep = train_mlp(emb.vectors, labels, split, gcn_cfg, graph.num_classes).second;
      }
      std::ofstream rep_out(out / (cmd_gcn->parsed() ? "gcn_report.json"
                                                     : "mlp_report.json"));
      rep_out << report_to_json(rep).dump(2) << '\n';
      save_loss_curve_csv(rep, out / "loss_curve.csv");
      std::cout << "valid " << rep.best_valid_accuracy << ", test " << rep.test_accuracy
                << " after " << rep.epochs_run << " epochs\n";
    } else if (cmd_run->parsed()) {
      auto backend = cfg.backend.kind == "http" ? cli_backend(cfg) : nullptr;
      auto provider = cfg.embedding.provider == "http" ? cli_provider(cfg) : nullptr;
      const ExperimentResult result = run_all(cfg, backend.get(), provider.get());
      std::cout << report(result);
    } else if (cmd_sweep_k->parsed()) {
      auto backend = cfg.backend.kind == "http" ? cli_backend(cfg) : nullptr;
      const auto rows = sweep_k(cfg, k_values, backend.get());
      std::cout << "k\tmean\tstd\n";
      for (const SweepRow& row : rows) {
        std::cout << static_cast<int>(row.key) << '\t'
                  << format_mean_std(row.mean, row.stddev) << '\n';
      }
    } else if (cmd_sweep_noise->parsed()) {
      auto backend = cfg.backend.kind == "http" ? cli_backend(cfg) : nullptr;
      const auto rows = sweep_noise(cfg, rates, backend.get());
      std::cout << "rate\trefined\tunrefined\n";
      for (const SweepRow& row : rows) {
        std::cout << row.key << '\t' << format_mean_std(row.mean, row.stddev) << '\t'
                  << format_mean_std(row.baseline_mean, row.baseline_stddev) << '\n';
      }
    } else if (cmd_report->parsed()) {
      const fs::path path =
          report_path.empty() ? out / "result.json" : fs::path(report_path);
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open " + path.string());
      nlohmann::json j;
      in >> j;
      std::cout << report(result_from_json(j));
    } else if (cmd_dot->parsed()) {
      const TextGraph graph = load_stage_graph(cfg);
      std::mt19937_64 rng(cfg.seed);
      std::vector<int> ids(static_cast<std::size_t>(graph.num_nodes()));
      for (int i = 0; i < graph.num_nodes(); ++i) ids[static_cast<std::size_t>(i)] = i;
      std::shuffle(ids.begin(), ids.end(), rng);
      std::set<int> subset(ids.begin(),
                           ids.begin() + std::min<std::ptrdiff_t>(dot_nodes, ids.size()));
      std::string dot;
      if (dot_refined) {
        // re-style added/deleted edges from the refinement sidecar
        std::ifstream meta_in(out / "refined" / "refined_meta.json");
        if (!meta_in) throw std::runtime_error("no refinement sidecar; run refine first");
        nlohmann::json meta;
        meta_in >> meta;
        std::set<Edge> added, deleted;
        for (const auto& e : meta.at("added_candidates")) {
          added.insert(make_edge(e[0].get<int>(), e[1].get<int>()));
        }
        for (const auto& e : meta.at("deleted_originals")) {
          deleted.insert(make_edge(e[0].get<int>(), e[1].get<int>()));
        }
        dot = to_dot(graph, subset, added, deleted);
      } else {
        dot = to_dot(graph, subset);
      }
      std::ofstream dot_out(out / "sample.dot");
      dot_out << dot;
      std::cout << "wrote " << (out / "sample.dot").string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
