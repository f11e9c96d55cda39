#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/miner.hpp"

namespace mhqa {

inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  ClipRules clip;
  MiningRules mining;

  double saliency_coef = 0.7;
  double similarity_coef = 0.10;
  double frames_per_second = 1.0;
  double proposal_tau = 0.07;

  double tau = 0.07;
  double lambda_bce = 1.0;
  double lambda_nce = 1.0;

  std::vector<double> iou_thresholds{0.3};
  std::vector<double> precision_thresholds{0.5};

  std::string llm_mode = "http";  // http | replay | record
  std::string llm_endpoint = "https://api.openai.com/v1/chat/completions";
  std::string llm_model = "gpt-4o";
  std::string filter_model = "gpt-4o";
  std::string judge_model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string fixtures_dir = "fixtures/replay";
  double temperature = 0.0;
  bool json_mode = true;
  std::size_t parallelism = 4;
  std::size_t max_retries = 2;
  std::size_t min_interval_ms = 0;
  std::size_t timeout_s = 60;

  std::string embed_mode = "http";  // http | replay
  std::string embed_endpoint = "https://api.openai.com/v1/embeddings";
  std::string embed_model = "text-embedding-3-small";
  std::string embed_fixtures_dir = "fixtures/embeddings";

  bool allow_heuristic = true;
  std::string store_path = "mhqa-store";

  std::string host = "127.0.0.1";
  std::size_t port = 8080;
  std::string token_env = "MHQA_TOKEN";
  std::string static_dir;

  /// Sets "section.key" from text. Throws a validation error naming the key
  /// on unknown keys, bad syntax or out-of-range values.
  void set(const std::string& key, const std::string& value);
  /// Same from a JSON value.
  void set_json(const std::string& key, const nlohmann::json& value);

  /// Reads MHQA_<SECTION>_<KEY> environment variables.
  void apply_env();
  /// Commented INI-style text: [section] headers, key = value lines, # or ;
  /// comments. A file ending in .json is read as {"section": {"key": value}}.
  void apply_file(const std::string& path);
  void apply_text(const std::string& text, const std::string& origin = "config");
  void apply_json(const nlohmann::json& j);
  /// "section.key=value" overrides.
  void apply_overrides(const std::vector<std::string>& assignments);

  /// Cross-field checks (t_min < t_max etc).
  void validate() const;

  nlohmann::json to_json() const;
  /// Documented defaults in the text format.
  static std::string default_text();

  /// Every known "section.key".
  static std::vector<std::string> keys();
};

/// Defaults, then environment, then file, then overrides.
RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides,
                      bool use_env = true);

}  // namespace mhqa
