#include "mhqa/llm_client.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "mhqa/error.hpp"

namespace mhqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw validation_error("endpoint URL must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const HttpEndpoint& endpoint, const json& body) {
  const auto parsed = parse_url(endpoint.url);
  httplib::Client client(parsed.scheme_host_port);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  auto res = client.Post(parsed.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::kTransport,
                "request to " + endpoint.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorKind::kTransport,
                "endpoint " + endpoint.url + " returned HTTP " + std::to_string(res->status),
                {{"status", res->status}, {"body", res->body.substr(0, 2000)}});
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kTransport, "endpoint returned non-JSON body: " + std::string(e.what()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

json ChatRequest::canonical() const {
  return json{{"model", model},
              {"system", system},
              {"user", user},
              {"temperature", temperature},
              {"json_mode", json_mode}};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIntegrity, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string fixture_key(const ChatRequest& request) {
  return sha256_hex(request.canonical().dump());
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) {
    throw Error(ErrorKind::kIntegrity,
                "cannot create " + tmp.string() + ": " + std::strerror(errno));
  }
  std::size_t written = 0;
  while (written < contents.size()) {
    const auto n = ::write(fd, contents.data() + written, contents.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(ErrorKind::kIntegrity, "write failed for " + tmp.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

std::atomic<std::size_t> HttpLlmClient::instances_{0};

HttpLlmClient::HttpLlmClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
  ++instances_;
}

std::string HttpLlmClient::complete(const ChatRequest& request) {
  json body{{"model", request.model},
            {"temperature", request.temperature},
            {"messages",
             json::array({json{{"role", "system"}, {"content", request.system}},
                          json{{"role", "user"}, {"content", request.user}}})}};
  if (request.json_mode) body["response_format"] = {{"type", "json_object"}};
  const json reply = post_json(endpoint_, body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kTransport, "chat endpoint reply lacks choices[0].message.content",
                {{"body", reply.dump().substr(0, 2000)}});
  }
}

ReplayLlmClient::ReplayLlmClient(fs::path dir) : dir_(std::move(dir)) {}

std::string ReplayLlmClient::complete(const ChatRequest& request) {
  const auto key = fixture_key(request);
  const auto path = dir_ / (key + ".json");
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kTransport, "no replay fixture for request " + key,
                {{"fixture", path.string()}});
  }
  const json fixture = json::parse(read_file(path));
  ++hits_;
  return fixture.at("response").get<std::string>();
}

RecordingLlmClient::RecordingLlmClient(std::shared_ptr<LlmClient> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::string RecordingLlmClient::complete(const ChatRequest& request) {
  std::string response = inner_->complete(request);
  json fixture{{"request", request.canonical()}, {"response", response}};
  std::lock_guard lock(mutex_);
  write_file_atomic(dir_ / (fixture_key(request) + ".json"), fixture.dump(2) + "\n");
  return response;
}

RateLimitedClient::RateLimitedClient(std::shared_ptr<LlmClient> inner,
                                     std::chrono::milliseconds min_interval)
    : inner_(std::move(inner)), min_interval_(min_interval) {}

std::string RateLimitedClient::complete(const ChatRequest& request) {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + min_interval_;
  }
  std::this_thread::sleep_until(slot);
  return inner_->complete(request);
}

HttpEmbeddingClient::HttpEmbeddingClient(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {
  parse_url(endpoint_.url);
}

std::vector<std::vector<double>> HttpEmbeddingClient::embed(const std::vector<std::string>& texts) {
  const json reply = post_json(endpoint_, json{{"model", model_}, {"input", texts}});
  std::vector<std::vector<double>> out;
  try {
    for (const auto& item : reply.at("data")) {
      out.push_back(item.at("embedding").get<std::vector<double>>());
    }
  } catch (const json::exception&) {
    throw Error(ErrorKind::kTransport, "embedding endpoint reply lacks data[].embedding");
  }
  if (out.size() != texts.size()) {
    throw Error(ErrorKind::kTransport, "embedding endpoint returned " +
                                           std::to_string(out.size()) + " vectors for " +
                                           std::to_string(texts.size()) + " inputs");
  }
  return out;
}

ReplayEmbeddingClient::ReplayEmbeddingClient(fs::path dir) : dir_(std::move(dir)) {}

std::vector<std::vector<double>> ReplayEmbeddingClient::embed(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const auto path = dir_ / (sha256_hex(text) + ".json");
    if (!fs::exists(path)) {
      throw Error(ErrorKind::kTransport, "no embedding fixture for text", {{"text", text}});
    }
    out.push_back(json::parse(read_file(path)).at("embedding").get<std::vector<double>>());
  }
  return out;
}

void ReplayEmbeddingClient::write_fixture(const fs::path& dir, const std::string& text,
                                          const std::vector<double>& embedding) {
  write_file_atomic(dir / (sha256_hex(text) + ".json"),
                    json{{"text", text}, {"embedding", embedding}}.dump() + "\n");
}

}  // namespace mhqa
