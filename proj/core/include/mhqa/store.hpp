#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/triplet.hpp"

namespace mhqa {

inline constexpr int kStoreSchemaVersion = 1;

/// Collections known to the store.
inline const std::vector<std::string>& store_collections() {
  static const std::vector<std::string> kCollections = {
      "clips", "candidates", "triplets", "rejections", "decisions", "review_base", "runs"};
  return kCollections;
}

enum class ReviewAction { kAccept, kAdjust, kReject };

std::string_view to_string(ReviewAction a);

struct ReviewDecision {
  std::string decision_id;
  std::string triplet_id;
  std::string reviewer_id;
  ReviewAction action = ReviewAction::kAccept;
  std::optional<char> category;
  std::optional<std::string> adjusted_answer;
  std::optional<SpanMap> adjusted_span_map;
  std::string timestamp;  // ISO 8601 UTC; filled on apply when empty
};

nlohmann::json to_json(const ReviewDecision& d);
/// Validates shape and the reject => U / adjust => fields rules; errors carry
/// field paths.
ReviewDecision decision_from_json(const nlohmann::json& j);

/// Pure state transition used both by Store::apply_review and history replay.
Triplet apply_decision(Triplet t, const ReviewDecision& d);

/// Field equality for a stored record; reject rules on resubmission.
bool decisions_equivalent(const ReviewDecision& a, const ReviewDecision& b);

/// Record filter: every entry must equal the record's field (string compare
/// against the field's string or number text).
using FieldFilter = std::map<std::string, std::string>;

/// File-backed store. Each collection keeps a compacted snapshot
/// (<name>.snapshot.jsonl) and an append-only log (<name>.log.jsonl). Every
/// line carries an FNV-1a checksum. Writes are serialized; reads share a lock.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::optional<nlohmann::json> get(const std::string& collection, const std::string& key) const;
  std::vector<nlohmann::json> list(const std::string& collection,
                                   const FieldFilter& filter = {}) const;
  std::vector<std::string> keys(const std::string& collection) const;
  std::size_t size(const std::string& collection) const;

  /// Throws Error{kConflict} when the key already exists.
  void insert(const std::string& collection, const std::string& key, const nlohmann::json& record);
  void upsert(const std::string& collection, const std::string& key, const nlohmann::json& record);

  /// Rewrites every snapshot sorted by key and truncates the logs.
  void compact();

  /// Applies a reviewer decision to a triplet in status llm_filtered.
  Triplet apply_review(ReviewDecision d);

  /// Replays review_base plus the decision log and returns the triplets it
  /// reproduces, keyed by id.
  std::map<std::string, Triplet> replay_reviews() const;

  /// Accepted triplets in benchmark form, sorted by id.
  std::vector<nlohmann::json> export_accepted() const;

 private:
  using Collection = std::map<std::string, nlohmann::json>;

  Collection& collection(const std::string& name);
  const Collection& collection(const std::string& name) const;
  void load(const std::string& name);
  void append(const std::string& name, const std::string& key, const nlohmann::json& record);
  void put_locked(const std::string& name, const std::string& key, const nlohmann::json& record);

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Collection> data_;
};

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

std::string utc_timestamp();

}  // namespace mhqa
