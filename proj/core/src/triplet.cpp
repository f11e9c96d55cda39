#include "mhqa/triplet.hpp"

#include <cmath>
#include <set>

#include "mhqa/error.hpp"
#include "mhqa/markers.hpp"

namespace mhqa {

using nlohmann::json;

std::string_view to_string(TripletStatus s) {
  switch (s) {
    case TripletStatus::kGenerated: return "generated";
    case TripletStatus::kLlmFiltered: return "llm_filtered";
    case TripletStatus::kAccepted: return "accepted";
    case TripletStatus::kRejected: return "rejected";
  }
  return "generated";
}

TripletStatus status_from_string(std::string_view s) {
  if (s == "generated") return TripletStatus::kGenerated;
  if (s == "llm_filtered") return TripletStatus::kLlmFiltered;
  if (s == "accepted") return TripletStatus::kAccepted;
  if (s == "rejected") return TripletStatus::kRejected;
  throw validation_error("unknown triplet status '" + std::string(s) + "'", {{"field", "status"}});
}

SpanSet Triplet::evidence() const {
  std::vector<TimeSpan> all;
  for (const auto& [key, spans] : span_map) all.insert(all.end(), spans.begin(), spans.end());
  return normalize(all);
}

bool valid_category(char c) { return (c >= 'A' && c <= 'F') || c == 'U'; }

std::optional<Violation> validate_triplet(const Triplet& t, double clip_length) {
  if (t.question.empty()) return Violation{"missing_field", "question is empty", "question"};
  if (t.answer.empty()) return Violation{"missing_field", "answer is empty", "answer"};
  const auto markers = check_markers(t.answer);
  if (!markers.ok) return Violation{"unbalanced_markers", markers.error, "answer"};
  std::set<std::string> in_answer(markers.keys.begin(), markers.keys.end());
  std::set<std::string> in_map;
  for (const auto& [key, spans] : t.span_map) in_map.insert(key);
  if (in_answer != in_map) {
    std::string detail;
    for (const auto& k : in_answer) {
      if (!in_map.count(k)) detail += " " + k + " has no span";
    }
    for (const auto& k : in_map) {
      if (!in_answer.count(k)) detail += " " + k + " is not in the answer";
    }
    return Violation{"marker_key_mismatch", "markers and span keys differ:" + detail, "span_map"};
  }
  for (const auto& [key, spans] : t.span_map) {
    if (spans.empty()) {
      return Violation{"empty_span_list", key + " has no spans", "span_map." + key};
    }
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const auto& s = spans[i];
      const std::string field = "span_map." + key + "[" + std::to_string(i) + "]";
      if (!std::isfinite(s.start) || !std::isfinite(s.end) || s.start < 0.0 || s.end < 0.0 ||
          s.start > clip_length || s.end > clip_length) {
        return Violation{"out_of_range",
                         key + " span [" + format_number(s.start) + ", " + format_number(s.end) +
                             "] is outside [0, " + format_number(clip_length) + "]",
                         field};
      }
      if (s.start > s.end) {
        return Violation{"reversed_span",
                         key + " span [" + format_number(s.start) + ", " + format_number(s.end) +
                             "] ends before it starts",
                         field};
      }
    }
  }
  if (t.category && !valid_category(*t.category)) {
    return Violation{"bad_category", std::string("category '") + *t.category + "' is not A-F or U",
                     "category"};
  }
  return std::nullopt;
}

json span_map_to_json(const SpanMap& m) {
  json j = json::object();
  for (const auto& [key, spans] : m) {
    json list = json::array();
    for (const auto& s : spans) list.push_back(json::array({json_number(s.start), json_number(s.end)}));
    j[key] = list;
  }
  return j;
}

namespace {

TimeSpan pair_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw validation_error(field + " must be a [start, end] pair of numbers", {{"field", field}});
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

SpanMap span_map_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("span_map must be an object", {{"field", "span_map"}});
  SpanMap out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string field = "span_map." + it.key();
    const json& v = it.value();
    std::vector<TimeSpan> spans;
    if (v.is_array() && v.size() == 2 && v[0].is_number()) {
      spans.push_back(pair_from_json(v, field));
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        spans.push_back(pair_from_json(v[i], field + "[" + std::to_string(i) + "]"));
      }
    } else {
      throw validation_error(field + " must be a span or a list of spans", {{"field", field}});
    }
    out[it.key()] = std::move(spans);
  }
  return out;
}

json to_json(const Triplet& t) {
  json j{{"schema", kTripletSchema},
         {"triplet_id", t.triplet_id},
         {"clip_id", t.clip_id},
         {"question", t.question},
         {"answer", t.answer},
         {"span_map", span_map_to_json(t.span_map)},
         {"category", t.category ? json(std::string(1, *t.category)) : json(nullptr)},
         {"status", to_string(t.status)},
         {"provenance",
          {{"candidate_id", t.provenance.candidate_id},
           {"template_id", t.provenance.template_id},
           {"model", t.provenance.model},
           {"prompt_version", t.provenance.prompt_version},
           {"repairs", t.provenance.repairs}}},
         {"history", t.history}};
  if (t.filter) j["filter"] = {{"judgement", t.filter->judgement}, {"rationale", t.filter->rationale}};
  return j;
}

Triplet triplet_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("triplet must be an object");
  Triplet t;
  try {
    t.triplet_id = j.at("triplet_id").get<std::string>();
    t.clip_id = j.value("clip_id", std::string());
    t.question = j.at("question").get<std::string>();
    t.answer = j.at("answer").get<std::string>();
    t.span_map = span_map_from_json(j.at("span_map"));
    if (j.contains("category") && !j["category"].is_null()) {
      const auto c = j["category"].get<std::string>();
      if (c.size() != 1 || !valid_category(c[0])) {
        throw validation_error("category must be one of A-F or U", {{"field", "category"}});
      }
      t.category = c[0];
    }
    t.status = status_from_string(j.value("status", std::string("generated")));
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      t.provenance.candidate_id = p.value("candidate_id", std::string());
      t.provenance.template_id = p.value("template_id", std::string());
      t.provenance.model = p.value("model", std::string());
      t.provenance.prompt_version = p.value("prompt_version", std::string());
      t.provenance.repairs = p.value("repairs", std::vector<std::string>{});
    }
    if (j.contains("filter") && j["filter"].is_object()) {
      t.filter = FilterRecord{j["filter"].value("judgement", 0),
                              j["filter"].value("rationale", std::string())};
    }
    t.history = j.value("history", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw validation_error(std::string("malformed triplet: ") + e.what());
  }
  return t;
}

}  // namespace mhqa
