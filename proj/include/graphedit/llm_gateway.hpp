#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "graphedit/edge_predictor.hpp"
#include "graphedit/graph.hpp"
#include "graphedit/util.hpp"

namespace graphedit {

struct PairPrompt {
  Edge edge;
  std::string prompt_text;
  std::vector<std::string> categories;
};

/// Parsed answer for one edge. category is set only when same_category is
/// true and the backend named one.
struct EdgeVerdict {
  Edge edge;
  bool same_category = false;
  std::optional<int> category;
  std::string raw_response;
};

class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(const std::string& raw)
      : std::runtime_error("verdict parse failure: \"" + raw + "\"") {}
};

namespace detail {

inline std::string paper_slot(const NodeRecord& n) {
  return "Title: " + n.title + ". Abstract: " + n.abstract_text + ".";
}

inline std::string category_list(const std::vector<std::string>& cats) {
  std::string out;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    if (c > 0) out += (c + 1 == cats.size()) ? ", or " : ", ";
    out += cats[c];
  }
  return out;
}

}  // namespace detail

/// Pair prompt with both objectives: label consistency plus the shared
/// category. include_category = false gives the reduced variant that expects
/// bare True/False answers.
inline PairPrompt build_pair_prompt(const TextGraph& g, int i, int j,
                                    bool include_category = true) {
  if (i == j) throw std::invalid_argument("build_pair_prompt: i == j");
  const NodeRecord& a = g.nodes[static_cast<std::size_t>(i)];
  const NodeRecord& b = g.nodes[static_cast<std::size_t>(j)];
  PairPrompt p;
  p.edge = make_edge(i, j);
  p.categories = g.category_names;
  std::string q = "Based on the title and abstract of the two paper nodes. ";
  if (include_category) {
    q += "Do they belong to the same category among " +
         detail::category_list(g.category_names) +
         "? If the answer is \"True\", answer \"True\" and the category, otherwise "
         "answer \"False\". ";
  } else {
    q += "Do they belong to the same category? If the answer is \"True\", answer "
         "\"True\", otherwise answer \"False\". ";
  }
  q += "The first paper: " + detail::paper_slot(a) +
       " The second paper: " + detail::paper_slot(b);
  p.prompt_text = std::move(q);
  return p;
}

/// Single-node category prompt used by the direct-classification ablation.
inline std::string build_node_prompt(const TextGraph& g, int i) {
  const NodeRecord& n = g.nodes[static_cast<std::size_t>(i)];
  return "Based on the title and abstract of the paper node. Which category does it "
         "belong to among " +
         detail::category_list(g.category_names) +
         "? Answer with the category. The paper: " + detail::paper_slot(n);
}

/// First category name found in `raw` (case-insensitive, longest name wins).
inline std::optional<int> find_category(const std::string& raw,
                                        const std::vector<std::string>& categories) {
  const std::string hay = to_lower(raw);
  std::vector<std::size_t> order(categories.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return categories[a].size() > categories[b].size();
  });
  for (std::size_t c : order) {
    if (hay.find(to_lower(categories[c])) != std::string::npos) {
      return static_cast<int>(c);
    }
  }
  return std::nullopt;
}

/// The leading "true"/"false" token decides same_category; a category name
/// is attached only on "true".
inline EdgeVerdict parse_verdict(const std::string& raw,
                                 const std::vector<std::string>& categories,
                                 Edge edge = {0, 0}) {
  EdgeVerdict v;
  v.edge = edge;
  v.raw_response = raw;
  std::string first_word;
  for (char ch : raw) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      first_word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!first_word.empty()) {
      break;
    }
  }
  if (first_word == "true") {
    v.same_category = true;
    v.category = find_category(raw, categories);
  } else if (first_word == "false") {
    v.same_category = false;
  } else {
    throw ParseFailure(raw);
  }
  return v;
}

/// Any completion service that can answer node-pair or single-node prompts.
/// i/j identify the nodes so label-oracle backends can answer from ground
/// truth; j < 0 marks a single-node prompt. Implementations must be safe to
/// share across concurrent requests.
class VerdictBackend {
 public:
  virtual ~VerdictBackend() = default;
  virtual std::string complete(const TextGraph& g, int i, int j,
                               const std::string& prompt) = 0;
};

/// Ground-truth stand-in for a tuned LLM. flip_rate inverts the consistency
/// answer per edge; category_error_rate swaps in a wrong category on "true"
/// answers. All noise is a deterministic function of (edge, seed).
struct OracleConfig {
  double flip_rate = 0.0;
  double category_error_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (flip_rate < 0.0 || flip_rate > 1.0 || category_error_rate < 0.0 ||
        category_error_rate > 1.0) {
      throw std::invalid_argument("OracleConfig: probabilities must be in [0, 1]");
    }
  }
};

namespace detail {

inline double edge_unit(int a, int b, std::uint64_t seed, std::uint64_t tag) {
  const std::uint64_t h = hash_combine(
      hash_combine(static_cast<std::uint64_t>(std::min(a, b)),
                   static_cast<std::uint64_t>(std::max(a, b)) + 0x9e37u),
      hash_combine(seed, tag));
  return hash_to_unit(h);
}

}  // namespace detail

inline std::string oracle_answer(const TextGraph& g, int i, int j,
                                 const OracleConfig& cfg) {
  cfg.validate();
  const int ci = g.nodes[static_cast<std::size_t>(i)].label;
  const int cj = g.nodes[static_cast<std::size_t>(j)].label;
  bool answer = (ci == cj);
  if (detail::edge_unit(i, j, cfg.seed, 1) < cfg.flip_rate) answer = !answer;
  if (!answer) return "False";
  // on a flipped "true" there is no shared class; report the lower-id node's
  // so the answer depends only on the unordered edge
  int category = g.nodes[static_cast<std::size_t>(std::min(i, j))].label;
  if (detail::edge_unit(i, j, cfg.seed, 2) < cfg.category_error_rate &&
      g.num_classes > 1) {
    const auto offset = static_cast<int>(
        detail::edge_unit(i, j, cfg.seed, 3) * (g.num_classes - 1));
    category = (category + 1 + std::min(offset, g.num_classes - 2)) % g.num_classes;
  }
  return "True, " + g.category_names[static_cast<std::size_t>(category)];
}

class OracleBackend final : public VerdictBackend {
 public:
  explicit OracleBackend(OracleConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  std::string complete(const TextGraph& g, int i, int j, const std::string&) override {
    if (j < 0) return node_answer(g, i);
    return oracle_answer(g, i, j, cfg_);
  }

 private:
  std::string node_answer(const TextGraph& g, int i) const {
    int category = g.nodes[static_cast<std::size_t>(i)].label;
    if (detail::edge_unit(i, -1, cfg_.seed, 4) < cfg_.category_error_rate &&
        g.num_classes > 1) {
      const auto offset = static_cast<int>(
          detail::edge_unit(i, -1, cfg_.seed, 5) * (g.num_classes - 1));
      category = (category + 1 + std::min(offset, g.num_classes - 2)) % g.num_classes;
    }
    return g.category_names[static_cast<std::size_t>(category)];
  }

  OracleConfig cfg_;
};

/// Answers every prompt with a fixed string; handy for mode-semantics tests.
class ConstantBackend final : public VerdictBackend {
 public:
  explicit ConstantBackend(std::string text) : text_(std::move(text)) {}
  std::string complete(const TextGraph&, int, int, const std::string&) override {
    return text_;
  }

 private:
  std::string text_;
};

class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, std::size_t completed)
      : std::runtime_error(what + " (completed " + std::to_string(completed) +
                           " verdicts before aborting)"),
        completed_(completed) {}
  std::size_t completed() const { return completed_; }

 private:
  std::size_t completed_;
};

struct VerdictBatch {
  std::vector<EdgeVerdict> verdicts;  // input edge order
  std::size_t parse_defaulted = 0;    // ParseFailure after retries -> same_category=false
};

/// Queries one verdict per edge with bounded parallelism. Output order
/// equals input order; parse failures are retried then defaulted to a
/// rejection.
inline VerdictBatch query_verdicts(const TextGraph& g, const std::vector<Edge>& edges,
                                   VerdictBackend& backend, int parallelism = 1,
                                   int retries = 2, bool include_category = true) {
  for (const Edge& e : edges) {
    if (e.first < 0 || e.second >= g.num_nodes() || e.first == e.second) {
      throw std::invalid_argument("query_verdicts: invalid edge (" +
                                  std::to_string(e.first) + ", " +
                                  std::to_string(e.second) + ")");
    }
  }
  VerdictBatch batch;
  batch.verdicts.resize(edges.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> defaulted{0};
  std::atomic<std::size_t> completed{0};
  std::mutex error_mu;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= edges.size()) return;
      if (first_error) return;
      const Edge e = edges[idx];
      try {
        const PairPrompt prompt =
            build_pair_prompt(g, e.first, e.second, include_category);
        EdgeVerdict v;
        bool parsed = false;
        for (int attempt = 0; attempt <= retries && !parsed; ++attempt) {
          const std::string raw =
              backend.complete(g, e.first, e.second, prompt.prompt_text);
          try {
            v = parse_verdict(raw, g.category_names, e);
            parsed = true;
          } catch (const ParseFailure&) {
            if (attempt == retries) {
              v.edge = e;
              v.same_category = false;  // conservative default: reject the edge
              v.category.reset();
              v.raw_response = raw;
              defaulted.fetch_add(1);
            }
          }
        }
        batch.verdicts[idx] = std::move(v);
        completed.fetch_add(1);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int width = std::max(1, std::min<int>(parallelism, static_cast<int>(edges.size())));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(width));
    for (int t = 0; t < width; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      throw BackendError(e.what(), completed.load());
    }
  }
  batch.parse_defaulted = defaulted.load();
  return batch;
}

/// JSON-lines instruction-tuning export: one {"instruction", "output"} object
/// per labeled pair, output "True, <category>" or "False".
inline void export_instruction_dataset(const TextGraph& g,
                                       const std::vector<PairSample>& pairs,
                                       const std::filesystem::path& path,
                                       bool include_category = true) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("export_instruction_dataset: cannot write " + path.string());
  }
  for (const PairSample& p : pairs) {
    if (p.y != 0 && p.y != 1) {
      throw std::invalid_argument("export_instruction_dataset: unlabeled pair");
    }
    const PairPrompt prompt = build_pair_prompt(g, p.i, p.j, include_category);
    std::string answer;
    if (p.y == 1) {
      answer = include_category
                   ? "True, " + g.category_names[static_cast<std::size_t>(p.ci)]
                   : "True";
    } else {
      answer = "False";
    }
    nlohmann::json j{{"instruction", prompt.prompt_text}, {"output", answer}};
    out << j.dump() << '\n';
  }
}

/// Single-node classification through the backend; the direct-inference
/// ablation. Returns nullopt when no category can be parsed after retries.
inline std::optional<int> classify_node_direct(const TextGraph& g, int i,
                                               VerdictBackend& backend, int retries = 2) {
  const std::string prompt = build_node_prompt(g, i);
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const std::string raw = backend.complete(g, i, -1, prompt);
    const auto cat = find_category(raw, g.category_names);
    if (cat) return cat;
  }
  return std::nullopt;
}

}  // namespace graphedit
