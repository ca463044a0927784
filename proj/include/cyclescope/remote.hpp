#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cyclescope/embedding.hpp"

namespace cyclescope {

/// Embedding provider backed by an HTTP endpoint.
/// Request:  POST <path> {"texts": ["...", ...]}
/// Response: {"vectors": [[...], ...]}, one vector per text, fixed dimension.
/// Any transport or protocol failure raises ProviderError; a remote outage
/// never turns into a silent label-0.
class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(const std::string& endpoint,
                                   int timeout_ms = 5000)
      : endpoint_(endpoint), name_("remote:" + endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
      throw ProviderError("endpoint must look like http://host:port/path");
    const auto path_start = endpoint.find('/', scheme_end + 3);
    base_ = path_start == std::string::npos ? endpoint
                                            : endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/"
                                            : endpoint.substr(path_start);
    client_ = std::make_unique<httplib::Client>(base_);
    client_->set_connection_timeout(timeout_ms / 1000,
                                    (timeout_ms % 1000) * 1000);
    client_->set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  }

  const std::string& name() const override { return name_; }

  /// 0 until the first successful call fixes the endpoint's dimension.
  std::size_t dimension() const override {
    std::lock_guard<std::mutex> lock(mutex_);
    return dim_;
  }

  EmbeddingVector embed(std::string_view text) override {
    return embed_batch({std::string(text)}).front();
  }

  // The underlying HTTP client is not safe for concurrent use; requests
  // from parallel workers are serialized here.
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override {
    std::lock_guard<std::mutex> lock(mutex_);
    nlohmann::json body;
    body["texts"] = texts;
    auto res = client_->Post(path_, body.dump(), "application/json");
    if (!res)
      throw ProviderError("embedding endpoint '" + endpoint_ +
                          "' unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw ProviderError("embedding endpoint returned HTTP " +
                          std::to_string(res->status));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProviderError(std::string("embedding response is not JSON: ") +
                          e.what());
    }
    if (!j.contains("vectors") || !j["vectors"].is_array() ||
        j["vectors"].size() != texts.size())
      throw ProviderError("embedding response must carry one vector per text");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& row : j["vectors"]) {
      if (!row.is_array())
        throw ProviderError("embedding vector rows must be arrays");
      EmbeddingVector v;
      v.reserve(row.size());
      for (const auto& x : row) {
        if (!x.is_number())
          throw ProviderError("embedding vector entries must be numbers");
        v.push_back(x.get<double>());
      }
      if (dim_ == 0) dim_ = v.size();
      if (v.size() != dim_)
        throw ProviderError("embedding dimension changed mid-stream: " +
                            std::to_string(v.size()) + " vs " +
                            std::to_string(dim_));
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::string endpoint_;
  std::string name_;
  std::string base_;
  std::string path_;
  std::size_t dim_ = 0;
  std::unique_ptr<httplib::Client> client_;
  mutable std::mutex mutex_;
};

}  // namespace cyclescope
