#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/spans.hpp"

namespace mhqa {

inline constexpr std::string_view kTripletSchema = "mhqa.triplet/v1";

enum class TripletStatus { kGenerated, kLlmFiltered, kAccepted, kRejected };

std::string_view to_string(TripletStatus s);
TripletStatus status_from_string(std::string_view s);

struct Provenance {
  std::string candidate_id;
  std::string template_id;
  std::string model;
  std::string prompt_version;
  std::vector<std::string> repairs;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct FilterRecord {
  int judgement = 0;
  std::string rationale;

  friend bool operator==(const FilterRecord&, const FilterRecord&) = default;
};

using SpanMap = std::map<std::string, std::vector<TimeSpan>>;

struct Triplet {
  std::string triplet_id;
  std::string clip_id;
  std::string question;
  std::string answer;
  SpanMap span_map;
  std::optional<char> category;  // 'A'..'F' or 'U'
  TripletStatus status = TripletStatus::kGenerated;
  Provenance provenance;
  std::optional<FilterRecord> filter;
  std::vector<std::string> history;  // applied review decision ids

  /// Union of every span in span_map.
  SpanSet evidence() const;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Structural problem found in a generation or an edited triplet.
struct Violation {
  std::string code;     // unbalanced_markers, marker_key_mismatch, out_of_range, ...
  std::string message;
  std::string field;    // JSON path of the offending field, e.g. "span_map.<T2>[0]"
};

/// Marker grammar, marker/key bijection and span bounds [0, clip_length].
std::optional<Violation> validate_triplet(const Triplet& t, double clip_length = 180.0);

/// Category letters A-F plus U.
bool valid_category(char c);

nlohmann::json to_json(const Triplet& t);
Triplet triplet_from_json(const nlohmann::json& j);

nlohmann::json span_map_to_json(const SpanMap& m);
/// Accepts a single [s, e] or a list of them per key. Throws Error{kValidation}
/// with a field path on malformed input.
SpanMap span_map_from_json(const nlohmann::json& j);

}  // namespace mhqa
