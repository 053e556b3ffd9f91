#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphedit/graph.hpp"
#include "graphedit/util.hpp"

namespace graphedit {

/// Per-node dense representations, one row per node, rows L2-normalized.
struct EmbeddingMatrix {
  Eigen::MatrixXd vectors;  // N x d
  int dim = 0;
  std::string provider_id;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
  virtual int dim() const = 0;
  virtual std::string id() const = 0;
};

/// Deterministic feature-hashed bag of words. Tokens are lowercased and
/// split on non-alphanumerics; each token lands in a seeded hash bucket with
/// a +-1 sign hash; the count vector is L2-normalized. Empty text falls back
/// to the uniform vector (then normalized).
inline std::vector<double> hashed_bow_embed(const std::string& text, int d,
                                            std::uint64_t seed) {
  if (d < 16) throw std::invalid_argument("hashed_bow_embed: dimension must be >= 16");
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  const auto tokens = tokenize(text);
  if (tokens.empty()) {
    const double u = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : v) x = u;
    return v;
  }
  for (const std::string& tok : tokens) {
    const std::uint64_t h = fnv1a64(tok, seed);
    const auto bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(d));
    const double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
    v[bucket] += sign;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  } else {
    // all counts cancelled; same fallback as empty text
    const double u = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : v) x = u;
  }
  return v;
}

class HashedBowProvider final : public EmbeddingProvider {
 public:
  HashedBowProvider(int d, std::uint64_t seed) : d_(d), seed_(seed) {}

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(hashed_bow_embed(t, d_, seed_));
    return out;
  }
  int dim() const override { return d_; }
  std::string id() const override {
    return "hashed-bow-d" + std::to_string(d_) + "-s" + std::to_string(seed_);
  }

 private:
  int d_;
  std::uint64_t seed_;
};

/// Embeds every node's title + abstract. Rows come back in node-id order and
/// are L2-normalized regardless of provider.
inline EmbeddingMatrix embed_nodes(const TextGraph& g, EmbeddingProvider& provider,
                                   int batch_size = 64) {
  const int n = g.num_nodes();
  EmbeddingMatrix m;
  m.dim = provider.dim();
  m.provider_id = provider.id();
  m.vectors.resize(n, m.dim);
  for (int start = 0; start < n; start += batch_size) {
    const int stop = std::min(n, start + batch_size);
    std::vector<std::string> texts;
    texts.reserve(static_cast<std::size_t>(stop - start));
    for (int i = start; i < stop; ++i) texts.push_back(g.node_text(i));
    std::vector<std::vector<double>> rows;
    try {
      rows = provider.embed(texts);
    } catch (const std::exception& e) {
      throw std::runtime_error("embed_nodes: provider failed at node " +
                               std::to_string(start) + ": " + e.what());
    }
    if (rows.size() != texts.size()) {
      throw std::runtime_error("embed_nodes: provider returned " +
                               std::to_string(rows.size()) + " rows for " +
                               std::to_string(texts.size()) + " texts");
    }
    for (int i = start; i < stop; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i - start)];
      if (static_cast<int>(row.size()) != m.dim) {
        throw std::runtime_error("embed_nodes: dimension mismatch at node " +
                                 std::to_string(i));
      }
      for (int c = 0; c < m.dim; ++c) m.vectors(i, c) = row[static_cast<std::size_t>(c)];
      const double norm = m.vectors.row(i).norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::runtime_error("embed_nodes: non-finite or zero row at node " +
                                 std::to_string(i));
      }
      m.vectors.row(i) /= norm;
    }
  }
  return m;
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_embeddings: cannot write " + path.string());
  out.write("GEMB0001", 8);
  const std::int64_t n = m.vectors.rows(), d = m.vectors.cols();
  const std::int64_t id_len = static_cast<std::int64_t>(m.provider_id.size());
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(&id_len), 8);
  out.write(m.provider_id.data(), id_len);
  out.write(reinterpret_cast<const char*>(m.vectors.data()),
            static_cast<std::streamsize>(sizeof(double)) * n * d);
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_embeddings: cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "GEMB0001") {
    throw std::runtime_error("load_embeddings: bad magic in " + path.string());
  }
  std::int64_t n = 0, d = 0, id_len = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&d), 8);
  in.read(reinterpret_cast<char*>(&id_len), 8);
  EmbeddingMatrix m;
  m.provider_id.resize(static_cast<std::size_t>(id_len));
  in.read(m.provider_id.data(), id_len);
  m.dim = static_cast<int>(d);
  m.vectors.resize(n, d);
  in.read(reinterpret_cast<char*>(m.vectors.data()),
          static_cast<std::streamsize>(sizeof(double)) * n * d);
  if (!in) throw std::runtime_error("load_embeddings: truncated file " + path.string());
  return m;
}

}  // namespace graphedit
