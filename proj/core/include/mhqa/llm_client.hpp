#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mhqa {

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
  bool json_mode = true;

  /// Canonical form hashed to address replay fixtures.
  nlohmann::json canonical() const;
};

/// Narrow chat-completion interface shared by generation, filtration and
/// judging. Implementations throw Error{kTransport} on endpoint failure.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  /// Identifier recorded in triplet provenance.
  virtual std::string id() const = 0;
};

struct HttpEndpoint {
  std::string url;          // e.g. https://api.openai.com/v1/chat/completions
  std::string api_key;      // sent as "Authorization: Bearer <key>" when set
  std::chrono::seconds timeout{60};
};

/// OpenAI-compatible JSON-over-HTTP chat endpoint.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpEndpoint endpoint);
  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return "http:" + endpoint_.url; }

  /// Number of HTTP clients constructed in this process.
  static std::size_t instances() { return instances_.load(); }

 private:
  HttpEndpoint endpoint_;
  static std::atomic<std::size_t> instances_;
};

/// Serves recorded responses from a directory of content-addressed fixtures
/// (<dir>/<sha256 of canonical request>.json). A miss is a transport error.
class ReplayLlmClient final : public LlmClient {
 public:
  explicit ReplayLlmClient(std::filesystem::path dir);
  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return "replay"; }

  std::size_t hits() const { return hits_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0};
};

/// Forwards to an inner client and writes every exchange as a fixture that
/// ReplayLlmClient can serve later.
class RecordingLlmClient final : public LlmClient {
 public:
  RecordingLlmClient(std::shared_ptr<LlmClient> inner, std::filesystem::path dir);
  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<LlmClient> inner_;
  std::filesystem::path dir_;
  std::mutex mutex_;
};

/// Enforces a minimum interval between requests to the wrapped client.
class RateLimitedClient final : public LlmClient {
 public:
  RateLimitedClient(std::shared_ptr<LlmClient> inner, std::chrono::milliseconds min_interval);
  std::string complete(const ChatRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<LlmClient> inner_;
  std::chrono::milliseconds min_interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

/// Sentence embedding endpoint used for answer similarity.
class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// OpenAI-compatible embeddings endpoint ({"model", "input"} -> data[].embedding).
class HttpEmbeddingClient final : public EmbeddingClient {
 public:
  HttpEmbeddingClient(HttpEndpoint endpoint, std::string model);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
};

/// Embeddings looked up by sha256(text) in <dir>/<hash>.json files holding
/// {"text": ..., "embedding": [...]}.
class ReplayEmbeddingClient final : public EmbeddingClient {
 public:
  explicit ReplayEmbeddingClient(std::filesystem::path dir);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  /// Writes a fixture for one text; used when building fixture sets.
  static void write_fixture(const std::filesystem::path& dir, const std::string& text,
                            const std::vector<double>& embedding);

 private:
  std::filesystem::path dir_;
};

std::string sha256_hex(std::string_view data);

/// Content address of a request inside a fixture directory.
std::string fixture_key(const ChatRequest& request);

/// Writes `contents` to `path` atomically (temp file in the same directory,
/// flush, rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mhqa
