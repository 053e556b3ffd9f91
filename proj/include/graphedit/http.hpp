#pragma once

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
// httplib drags in <resolv.h>, whose _res macro breaks Eigen's templates
#ifdef _res
#undef _res
#endif

#include <json.hpp>

#include "graphedit/embeddings.hpp"
#include "graphedit/llm_gateway.hpp"

namespace graphedit {

struct HttpConfig {
  std::string url;       // e.g. http://127.0.0.1:8080/v1/complete
  std::string token;     // optional bearer token, never persisted
  int timeout_seconds = 30;
  int retries = 2;
};

namespace detail {

struct SplitUrl {
  std::string host;  // scheme://host:port
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("bad URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

inline nlohmann::json post_json(const HttpConfig& cfg, const nlohmann::json& body) {
  const SplitUrl u = split_url(cfg.url);
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    }
    httplib::Client client(u.host);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);
    httplib::Headers headers;
    if (!cfg.token.empty()) headers.emplace("Authorization", "Bearer " + cfg.token);
    auto res = client.Post(u.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const std::exception& e) {
      last_error = std::string("bad JSON response: ") + e.what();
    }
  }
  throw std::runtime_error("POST " + cfg.url + " failed after " +
                           std::to_string(cfg.retries + 1) + " attempts: " + last_error);
}

}  // namespace detail

/// Completion-style verdict backend. Wire protocol: POST
/// {"prompt": str, "max_tokens": int} -> {"text": str}.
class HttpVerdictBackend final : public VerdictBackend {
 public:
  explicit HttpVerdictBackend(HttpConfig cfg, int max_tokens = 64)
      : cfg_(std::move(cfg)), max_tokens_(max_tokens) {}

  std::string complete(const TextGraph&, int, int, const std::string& prompt) override {
    const nlohmann::json res =
        detail::post_json(cfg_, {{"prompt", prompt}, {"max_tokens", max_tokens_}});
    return res.at("text").get<std::string>();
  }

 private:
  HttpConfig cfg_;
  int max_tokens_;
};

/// External embedding service. Wire protocol: POST {"texts": [str]} ->
/// {"vectors": [[float]]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpConfig cfg, int dim) : cfg_(std::move(cfg)), dim_(dim) {}

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    const nlohmann::json res = detail::post_json(cfg_, {{"texts", texts}});
    return res.at("vectors").get<std::vector<std::vector<double>>>();
  }
  int dim() const override { return dim_; }
  std::string id() const override { return "http:" + cfg_.url; }

 private:
  HttpConfig cfg_;
  int dim_;
};

/// Backend URL/token come from the environment, never from result files.
inline HttpConfig http_config_from_env(const std::string& fallback_url = "") {
  HttpConfig cfg;
  if (const char* url = std::getenv("GRAPHEDIT_BACKEND_URL")) cfg.url = url;
  if (cfg.url.empty()) cfg.url = fallback_url;
  if (const char* token = std::getenv("GRAPHEDIT_BACKEND_TOKEN")) cfg.token = token;
  return cfg;
}

}  // namespace graphedit
