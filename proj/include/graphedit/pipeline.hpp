#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphedit/dataset_io.hpp"
#include "graphedit/edge_predictor.hpp"
#include "graphedit/embeddings.hpp"
#include "graphedit/gcn.hpp"
#include "graphedit/graph.hpp"
#include "graphedit/llm_gateway.hpp"
#include "graphedit/refinement.hpp"
#include "graphedit/util.hpp"

namespace graphedit {

struct BackendConfig {
  std::string kind = "oracle";  // oracle | http | constant
  OracleConfig oracle;
  std::string url;           // http backend; env var overrides
  std::string constant_text;  // constant backend
};

struct EmbeddingConfig {
  std::string provider = "hashed-bow";  // hashed-bow | http
  int dim = 256;
  std::uint64_t seed = 7;
  std::string url;
};

/// One configuration drives the whole experiment; every stage's randomness
/// flows from the seeds recorded here.
struct ExperimentConfig {
  std::string dataset_manifest;  // empty -> synthetic
  SyntheticSpec synthetic;
  double noise_rate = 0.0;
  std::uint64_t noise_seed = 99;

  double train_ratio = 0.6, valid_ratio = 0.2, test_ratio = 0.2;
  std::uint64_t seed = 1;  // base seed: split, pair sampling, per-repeat offsets

  std::size_t pair_count = 20000;
  EmbeddingConfig embedding;
  EdgePredictorConfig predictor;
  int k = 3;
  RefinementMode mode = RefinementMode::Full;
  BackendConfig backend;
  int parallelism = 4;
  int verdict_retries = 2;
  bool prompt_with_category = true;
  GcnConfig gcn;
  int repeats = 10;

  std::string out_dir = "out";
  bool use_cache = true;
};

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"n", s.n},
       {"num_classes", s.num_classes},
       {"p_in", s.p_in},
       {"p_out", s.p_out},
       {"vocab_per_class", s.vocab_per_class},
       {"tokens_per_node", s.tokens_per_node},
       {"shared_vocab", s.shared_vocab},
       {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s.n = j.value("n", s.n);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.p_in = j.value("p_in", s.p_in);
  s.p_out = j.value("p_out", s.p_out);
  s.vocab_per_class = j.value("vocab_per_class", s.vocab_per_class);
  s.tokens_per_node = j.value("tokens_per_node", s.tokens_per_node);
  s.shared_vocab = j.value("shared_vocab", s.shared_vocab);
  s.seed = j.value("seed", s.seed);
}

inline void to_json(nlohmann::json& j, const OracleConfig& c) {
  j = {{"flip_rate", c.flip_rate},
       {"category_error_rate", c.category_error_rate},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, OracleConfig& c) {
  c.flip_rate = j.value("flip_rate", c.flip_rate);
  c.category_error_rate = j.value("category_error_rate", c.category_error_rate);
  c.seed = j.value("seed", c.seed);
}

inline void to_json(nlohmann::json& j, const BackendConfig& c) {
  j = {{"kind", c.kind},
       {"oracle", c.oracle},
       {"url", c.url},
       {"constant_text", c.constant_text}};
}

inline void from_json(const nlohmann::json& j, BackendConfig& c) {
  c.kind = j.value("kind", c.kind);
  if (j.contains("oracle")) c.oracle = j["oracle"].get<OracleConfig>();
  c.url = j.value("url", c.url);
  c.constant_text = j.value("constant_text", c.constant_text);
}

inline void to_json(nlohmann::json& j, const EmbeddingConfig& c) {
  j = {{"provider", c.provider}, {"dim", c.dim}, {"seed", c.seed}, {"url", c.url}};
}

inline void from_json(const nlohmann::json& j, EmbeddingConfig& c) {
  c.provider = j.value("provider", c.provider);
  c.dim = j.value("dim", c.dim);
  c.seed = j.value("seed", c.seed);
  c.url = j.value("url", c.url);
}

inline void to_json(nlohmann::json& j, const EdgePredictorConfig& c) {
  j = {{"hidden", c.hidden}, {"lr", c.lr},     {"epochs", c.epochs},
       {"batch", c.batch},   {"seed", c.seed}, {"pos_weight", c.pos_weight}};
}

inline void from_json(const nlohmann::json& j, EdgePredictorConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
  c.lr = j.value("lr", c.lr);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.seed = j.value("seed", c.seed);
  c.pos_weight = j.value("pos_weight", c.pos_weight);
}

inline void to_json(nlohmann::json& j, const GcnConfig& c) {
  j = {{"hidden", c.hidden},     {"lr", c.lr},
       {"epochs", c.epochs},     {"patience", c.patience},
       {"weight_decay", c.weight_decay}, {"dropout", c.dropout},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, GcnConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
  c.lr = j.value("lr", c.lr);
  c.epochs = j.value("epochs", c.epochs);
  c.patience = j.value("patience", c.patience);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"dataset_manifest", c.dataset_manifest},
       {"synthetic", c.synthetic},
       {"noise_rate", c.noise_rate},
       {"noise_seed", c.noise_seed},
       {"train_ratio", c.train_ratio},
       {"valid_ratio", c.valid_ratio},
       {"test_ratio", c.test_ratio},
       {"seed", c.seed},
       {"pair_count", c.pair_count},
       {"embedding", c.embedding},
       {"predictor", c.predictor},
       {"k", c.k},
       {"mode", to_string(c.mode)},
       {"backend", c.backend},
       {"parallelism", c.parallelism},
       {"verdict_retries", c.verdict_retries},
       {"prompt_with_category", c.prompt_with_category},
       {"gcn", c.gcn},
       {"repeats", c.repeats},
       {"out_dir", c.out_dir},
       {"use_cache", c.use_cache}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.dataset_manifest = j.value("dataset_manifest", c.dataset_manifest);
  if (j.contains("synthetic")) c.synthetic = j["synthetic"].get<SyntheticSpec>();
  c.noise_rate = j.value("noise_rate", c.noise_rate);
  c.noise_seed = j.value("noise_seed", c.noise_seed);
  c.train_ratio = j.value("train_ratio", c.train_ratio);
  c.valid_ratio = j.value("valid_ratio", c.valid_ratio);
  c.test_ratio = j.value("test_ratio", c.test_ratio);
  c.seed = j.value("seed", c.seed);
  c.pair_count = j.value("pair_count", c.pair_count);
  if (j.contains("embedding")) c.embedding = j["embedding"].get<EmbeddingConfig>();
  if (j.contains("predictor")) c.predictor = j["predictor"].get<EdgePredictorConfig>();
  c.k = j.value("k", c.k);
  if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
  if (j.contains("backend")) c.backend = j["backend"].get<BackendConfig>();
  c.parallelism = j.value("parallelism", c.parallelism);
  c.verdict_retries = j.value("verdict_retries", c.verdict_retries);
  c.prompt_with_category = j.value("prompt_with_category", c.prompt_with_category);
  if (j.contains("gcn")) c.gcn = j["gcn"].get<GcnConfig>();
  c.repeats = j.value("repeats", c.repeats);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.use_cache = j.value("use_cache", c.use_cache);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return j.get<ExperimentConfig>();
}

inline std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingConfig& c);
inline std::unique_ptr<VerdictBackend> make_backend(const BackendConfig& c);

struct SweepRow {
  double key = 0.0;  // k or noise rate
  double mean = 0.0;
  double stddev = 0.0;
  double baseline_mean = 0.0;
  double baseline_stddev = 0.0;
};

struct ExperimentResult {
  std::vector<double> accuracies;           // refined pipeline, per repeat
  std::vector<double> baseline_accuracies;  // GCN on the input graph, per repeat
  double mean = 0.0, stddev = 0.0;
  double baseline_mean = 0.0, baseline_stddev = 0.0;
  RefinementReport refinement;
  std::size_t original_edges = 0;
  std::size_t refined_edges = 0;
  // bookkeeping, deliberately excluded from the deterministic result JSON
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<std::pair<std::string, bool>> cache_hits;
};

inline nlohmann::json result_to_json(const ExperimentResult& r) {
  return {{"accuracies", r.accuracies},
          {"baseline_accuracies", r.baseline_accuracies},
          {"mean", r.mean},
          {"stddev", r.stddev},
          {"baseline_mean", r.baseline_mean},
          {"baseline_stddev", r.baseline_stddev},
          {"refinement", report_to_json(r.refinement)},
          {"original_edges", r.original_edges},
          {"refined_edges", r.refined_edges}};
}

inline ExperimentResult result_from_json(const nlohmann::json& j) {
  ExperimentResult r;
  r.accuracies = j.at("accuracies").get<std::vector<double>>();
  r.baseline_accuracies = j.at("baseline_accuracies").get<std::vector<double>>();
  r.mean = j.at("mean").get<double>();
  r.stddev = j.at("stddev").get<double>();
  r.baseline_mean = j.at("baseline_mean").get<double>();
  r.baseline_stddev = j.at("baseline_stddev").get<double>();
  const auto& ref = j.at("refinement");
  r.refinement.kept_originals = ref.at("kept_originals").get<std::size_t>();
  r.refinement.deleted_originals = ref.at("deleted_originals").get<std::size_t>();
  r.refinement.added_candidates = ref.at("added_candidates").get<std::size_t>();
  r.refinement.intra_fraction_before = ref.at("intra_fraction_before").get<double>();
  r.refinement.intra_fraction_after = ref.at("intra_fraction_after").get<double>();
  r.original_edges = j.at("original_edges").get<std::size_t>();
  r.refined_edges = j.at("refined_edges").get<std::size_t>();
  return r;
}

/// "mean +- std" scaled to percent, two decimals, matching result tables.
inline std::string format_mean_std(double mean, double stddev) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << 100.0 * mean << " ± " << 100.0 * stddev;
  return os.str();
}

namespace detail {

inline std::uint64_t json_hash(const nlohmann::json& j, std::uint64_t seed = 0) {
  return fnv1a64(j.dump(), seed);
}

inline std::string hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

struct StageTimer {
  ExperimentResult& result;
  std::string name;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  ~StageTimer() {
    const auto stop = std::chrono::steady_clock::now();
    result.stage_seconds.emplace_back(
        name, std::chrono::duration<double>(stop - start).count());
  }
};

}  // namespace detail

/// Content-addressed stage hashes: each stage's key folds in its own config
/// plus the hash of the stage it consumes, so changing one field invalidates
/// exactly the downstream stages.
struct StageHashes {
  std::uint64_t data = 0, split = 0, pairs = 0, embeddings = 0, model = 0,
                candidates = 0, refined = 0, result = 0;
};

inline StageHashes stage_hashes(const ExperimentConfig& cfg) {
  using detail::json_hash;
  StageHashes h;
  h.data = json_hash({{"manifest", cfg.dataset_manifest},
                      {"synthetic", cfg.synthetic},
                      {"noise_rate", cfg.noise_rate},
                      {"noise_seed", cfg.noise_seed}});
  h.split = hash_combine(h.data, json_hash({{"train", cfg.train_ratio},
                                            {"valid", cfg.valid_ratio},
                                            {"test", cfg.test_ratio},
                                            {"seed", cfg.seed}}));
  h.pairs = hash_combine(h.split, json_hash({{"m", cfg.pair_count}, {"seed", cfg.seed}}));
  h.embeddings = hash_combine(h.data, json_hash(nlohmann::json(cfg.embedding)));
  h.model = hash_combine(hash_combine(h.pairs, h.embeddings),
                         json_hash(nlohmann::json(cfg.predictor)));
  h.candidates = hash_combine(h.model, json_hash({{"k", cfg.k}}));
  h.refined = hash_combine(
      h.candidates, json_hash({{"mode", to_string(cfg.mode)},
                               {"backend", cfg.backend},
                               {"prompt_with_category", cfg.prompt_with_category},
                               {"retries", cfg.verdict_retries}}));
  h.result = hash_combine(h.refined, json_hash({{"gcn", cfg.gcn},
                                                {"repeats", cfg.repeats},
                                                {"seed", cfg.seed}}));
  return h;
}

/// End-to-end pipeline. The refined structure is computed once; repeat i
/// re-splits and re-initializes the classifier with seed base+i. Artifacts
/// land under cfg.out_dir; cached stages are reused when use_cache is set.
inline ExperimentResult run_all(const ExperimentConfig& cfg,
                                VerdictBackend* backend_override = nullptr,
                                EmbeddingProvider* provider_override = nullptr) {
  if (cfg.repeats < 1) throw std::invalid_argument("run_all: repeats must be >= 1");
  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  const fs::path cache_dir = out / "cache";
  fs::create_directories(cache_dir);
  const StageHashes hashes = stage_hashes(cfg);

  ExperimentResult result;
  auto cached = [&](const std::string& stage, std::uint64_t h,
                    const std::string& ext) -> fs::path {
    return cache_dir / (stage + "_" + detail::hex(h) + ext);
  };

  // --- data ---------------------------------------------------------------
  TextGraph g;
  {
    detail::StageTimer t{result, "data"};
    const fs::path dir = cached("data", hashes.data, "");
    if (cfg.use_cache && fs::exists(dir / "manifest.json")) {
      g = load_graph(dir);
      result.cache_hits.emplace_back("data", true);
    } else {
      if (cfg.dataset_manifest.empty()) {
        g = generate_synthetic(cfg.synthetic);
      } else {
        g = load_dataset(load_manifest(cfg.dataset_manifest));
      }
      if (cfg.noise_rate > 0.0) g = inject_noise(g, cfg.noise_rate, cfg.noise_seed);
      if (cfg.use_cache) save_graph(g, dir);
      result.cache_hits.emplace_back("data", false);
    }
  }
  result.original_edges = static_cast<std::size_t>(g.num_edges());

  // --- split + pair sampling ----------------------------------------------
  NodeSplit split;
  std::vector<PairSample> pairs;
  {
    detail::StageTimer t{result, "pairs"};
    split = split_nodes(g, cfg.train_ratio, cfg.valid_ratio, cfg.test_ratio, cfg.seed);
    pairs = label_pairs(sample_pairs(split.train, cfg.pair_count, cfg.seed ^ 0xa5a5u), g);
    export_instruction_dataset(g, pairs, out / "instructions.jsonl",
                               cfg.prompt_with_category);
    result.cache_hits.emplace_back("pairs", false);
  }

  // --- embeddings ---------------------------------------------------------
  EmbeddingMatrix emb;
  {
    detail::StageTimer t{result, "embeddings"};
    const fs::path path = cached("embeddings", hashes.embeddings, ".bin");
    if (cfg.use_cache && fs::exists(path)) {
      emb = load_embeddings(path);
      result.cache_hits.emplace_back("embeddings", true);
    } else {
      std::unique_ptr<EmbeddingProvider> owned;
      EmbeddingProvider* provider = provider_override;
      if (!provider) {
        owned = make_embedding_provider(cfg.embedding);
        provider = owned.get();
      }
      emb = embed_nodes(g, *provider);
      if (cfg.use_cache) save_embeddings(emb, path);
      result.cache_hits.emplace_back("embeddings", false);
    }
  }

  // --- edge predictor -----------------------------------------------------
  EdgePredictorModel model;
  {
    detail::StageTimer t{result, "edge_predictor"};
    const fs::path path = cached("model", hashes.model, ".json");
    if (cfg.use_cache && fs::exists(path)) {
      model = load_edge_predictor(path);
      result.cache_hits.emplace_back("edge_predictor", true);
    } else {
      model = train_edge_predictor(emb, pairs, cfg.predictor).model;
      if (cfg.use_cache) save_edge_predictor(model, path);
      result.cache_hits.emplace_back("edge_predictor", false);
    }
  }

  // --- candidates + refinement --------------------------------------------
  RefinedGraph refined;
  {
    detail::StageTimer t{result, "refine"};
    const fs::path path = cached("refined", hashes.refined, "");
    if (cfg.use_cache && fs::exists(path / "refined_edges.tsv")) {
      refined = RefinedGraph{};
      std::ifstream in(path / "refined_edges.tsv");
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int a = 0, b = 0;
        ls >> a >> b;
        refined.edges.insert(make_edge(a, b));
      }
      std::ifstream meta_in(path / "refined_meta.json");
      nlohmann::json meta;
      meta_in >> meta;
      for (const auto& e : meta.at("added_candidates")) {
        refined.provenance[make_edge(e[0].get<int>(), e[1].get<int>())] =
            EdgeProvenance::AddedCandidate;
      }
      for (const auto& e : meta.at("kept_originals")) {
        refined.provenance[make_edge(e[0].get<int>(), e[1].get<int>())] =
            EdgeProvenance::KeptOriginal;
      }
      for (const auto& e : meta.at("deleted_originals")) {
        refined.deleted_originals.insert(make_edge(e[0].get<int>(), e[1].get<int>()));
      }
      result.cache_hits.emplace_back("refine", true);
    } else {
      const CandidateSet cands = top_k_candidates(model, emb, cfg.k);
      save_candidates(cands, out / "candidates.tsv");
      const CandidatePool pool = assemble_candidate_pool(g, cands, cfg.mode);
      std::unique_ptr<VerdictBackend> owned_backend;
      VerdictBackend* backend = backend_override;
      if (!backend) {
        owned_backend = make_backend(cfg.backend);
        backend = owned_backend.get();
      }
      std::unique_ptr<VerdictCache> vcache;
      if (cfg.use_cache && cfg.backend.kind == "http") {
        // only the expensive real backend gets the resumable verdict cache
        vcache = std::make_unique<VerdictCache>(out / "verdict_cache.jsonl");
      }
      refined = refine(g, pool, *backend, cfg.parallelism, cfg.verdict_retries,
                       vcache.get(), cfg.prompt_with_category);
      if (cfg.use_cache) save_refined(refined, g, path);
      result.cache_hits.emplace_back("refine", false);
    }
  }
  result.refined_edges = refined.edges.size();
  result.refinement = refinement_report(refined, g);

  // --- downstream classifier, r paired repeats ----------------------------
  {
    detail::StageTimer t{result, "gcn"};
    const TextGraph refined_graph = refined.apply_to(g);
    const NormalizedAdjacency a_refined = normalize_adjacency(refined_graph);
    const NormalizedAdjacency a_original = normalize_adjacency(g);
    const Eigen::MatrixXd& x = emb.vectors;  // hashed features double as GCN inputs
    std::vector<int> labels(static_cast<std::size_t>(g.num_nodes()));
    for (int i = 0; i < g.num_nodes(); ++i) {
      labels[static_cast<std::size_t>(i)] = g.nodes[static_cast<std::size_t>(i)].label;
    }
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
      const NodeSplit rep_split =
          split_nodes(g, cfg.train_ratio, cfg.valid_ratio, cfg.test_ratio, rep_seed);
      GcnConfig gcn_cfg = cfg.gcn;
      gcn_cfg.seed = rep_seed;
      const auto [params_r, report_r] =
          train_gcn(a_refined, x, labels, rep_split, gcn_cfg, g.num_classes);
      const auto [params_b, report_b] =
          train_gcn(a_original, x, labels, rep_split, gcn_cfg, g.num_classes);
      result.accuracies.push_back(report_r.test_accuracy);
      result.baseline_accuracies.push_back(report_b.test_accuracy);
    }
  }

  const MeanStd ms = mean_std(result.accuracies);
  result.mean = ms.mean;
  result.stddev = ms.stddev;
  const MeanStd bs = mean_std(result.baseline_accuracies);
  result.baseline_mean = bs.mean;
  result.baseline_stddev = bs.stddev;

  {
    std::ofstream res_out(out / "result.json");
    res_out << result_to_json(result).dump(2) << '\n';
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [name, secs] : result.stage_seconds) timings[name] = secs;
    std::ofstream tim_out(out / "timings.json");
    tim_out << timings.dump(2) << '\n';
  }
  return result;
}

/// One run_all per k, all other settings shared.
inline std::vector<SweepRow> sweep_k(const ExperimentConfig& base,
                                     const std::vector<int>& k_values,
                                     VerdictBackend* backend_override = nullptr,
                                     EmbeddingProvider* provider_override = nullptr) {
  std::vector<SweepRow> rows;
  for (int k : k_values) {
    ExperimentConfig cfg = base;
    cfg.k = k;
    cfg.out_dir = base.out_dir + "/k" + std::to_string(k);
    const ExperimentResult r = run_all(cfg, backend_override, provider_override);
    rows.push_back({static_cast<double>(k), r.mean, r.stddev, r.baseline_mean,
                    r.baseline_stddev});
  }
  std::ofstream csv(std::filesystem::path(base.out_dir) / "sweep_k.csv");
  csv << "k,mean,std\n";
  csv.precision(17);
  for (const SweepRow& row : rows) {
    csv << static_cast<int>(row.key) << ',' << row.mean << ',' << row.stddev << '\n';
  }
  return rows;
}

/// For each rate: inject noise, then run the refined and unrefined pipelines.
inline std::vector<SweepRow> sweep_noise(const ExperimentConfig& base,
                                         const std::vector<double>& rates,
                                         VerdictBackend* backend_override = nullptr,
                                         EmbeddingProvider* provider_override = nullptr) {
  std::vector<SweepRow> rows;
  for (double rate : rates) {
    ExperimentConfig cfg = base;
    cfg.noise_rate = rate;
    std::ostringstream tag;
    tag << "noise" << rate;
    cfg.out_dir = base.out_dir + "/" + tag.str();
    const ExperimentResult r = run_all(cfg, backend_override, provider_override);
    rows.push_back({rate, r.mean, r.stddev, r.baseline_mean, r.baseline_stddev});
  }
  std::ofstream csv(std::filesystem::path(base.out_dir) / "sweep_noise.csv");
  csv << "rate,refined_mean,refined_std,unrefined_mean,unrefined_std\n";
  csv.precision(17);
  for (const SweepRow& row : rows) {
    csv << row.key << ',' << row.mean << ',' << row.stddev << ',' << row.baseline_mean
        << ',' << row.baseline_stddev << '\n';
  }
  return rows;
}

/// Human-readable summary; JSON output keeps full precision elsewhere.
inline std::string report(const ExperimentResult& r) {
  if (r.accuracies.empty()) throw std::invalid_argument("report: empty results");
  std::ostringstream os;
  os << "refined accuracy:   " << format_mean_std(r.mean, r.stddev) << '\n';
  os << "unrefined accuracy: " << format_mean_std(r.baseline_mean, r.baseline_stddev)
     << '\n';
  if (r.accuracies.size() == 1) {
    os << "warning: single run, standard deviation is not meaningful\n";
  }
  os << "edges: " << r.original_edges << " -> " << r.refined_edges << " (kept "
     << r.refinement.kept_originals << ", deleted " << r.refinement.deleted_originals
     << ", added " << r.refinement.added_candidates << ")\n";
  os << "intra-class edge fraction: " << r.refinement.intra_fraction_before << " -> "
     << r.refinement.intra_fraction_after << '\n';
  return os.str();
}

inline std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingConfig& c) {
  if (c.provider == "hashed-bow") {
    return std::make_unique<HashedBowProvider>(c.dim, c.seed);
  }
  throw std::invalid_argument("unknown embedding provider \"" + c.provider +
                              "\" (http providers are constructed in the CLI)");
}

inline std::unique_ptr<VerdictBackend> make_backend(const BackendConfig& c) {
  if (c.kind == "oracle") return std::make_unique<OracleBackend>(c.oracle);
  if (c.kind == "constant") return std::make_unique<ConstantBackend>(c.constant_text);
  throw std::invalid_argument("unknown backend kind \"" + c.kind +
                              "\" (http backends are constructed in the CLI)");
}

}  // namespace graphedit
