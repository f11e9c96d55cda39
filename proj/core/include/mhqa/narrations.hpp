#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/spans.hpp"

namespace mhqa {

inline constexpr double kClipSeconds = 180.0;

struct TokenAnnotation {
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;  // 1-based; 0 = root
  std::string deprel;

  friend bool operator==(const TokenAnnotation&, const TokenAnnotation&) = default;
};

enum class Attribute { kVerb, kDobj, kPobj };

std::string_view to_string(Attribute a);
Attribute attribute_from_string(std::string_view s);

struct ActionNode {
  Attribute attribute = Attribute::kVerb;
  std::string lemma_key;
  std::string surface;
  std::size_t narration_index = 0;

  friend bool operator==(const ActionNode&, const ActionNode&) = default;
};

struct Narration {
  std::string narration_id;
  std::string video_id;
  double start = 0.0;
  double end = 0.0;
  std::string text;
  std::optional<std::vector<TokenAnnotation>> tokens;
  bool heuristic = false;
  std::vector<ActionNode> nodes;

  TimeSpan span() const { return {start, end}; }
};

struct Clip {
  std::string clip_id;
  std::string video_id;
  TimeSpan window;
  std::vector<Narration> narrations;  // clip-local times
};

/// Narrations plus optional per-video durations as read from disk.
struct Corpus {
  std::vector<Narration> narrations;
  std::map<std::string, double> durations;
};

/// Sets end = next start; the last narration ends at clip_end.
/// Throws a validation error when starts are not non-decreasing.
std::vector<Narration> derive_end_times(std::vector<Narration> narrations,
                                        double clip_end = kClipSeconds);

/// Cuts [k*180, (k+1)*180) windows, drops the trailing partial window,
/// re-bases narrations to clip-local time and derives end times.
std::vector<Clip> segment_clips(const std::string& video_id, double duration,
                                const std::vector<Narration>& narrations);

std::string make_clip_id(const std::string& video_id, std::size_t index);

/// CSV with columns video_id,start,text and optional narration_id, duration.
/// A header row is optional; without one the columns are taken in that order.
Corpus read_narrations_csv(std::istream& in);
/// One JSON object per line with the same field names.
Corpus read_narrations_jsonl(std::istream& in);
/// Dispatches on the file extension (.csv or .jsonl/.json).
Corpus read_narrations_file(const std::string& path);

/// Sorts narrations by (video_id, start) keeping file order for ties and
/// assigns "<video_id>-<nnnn>" ids where missing.
void canonicalize(Corpus& corpus);

/// CoNLL-U sentences keyed by their "# sent_id" comment.
std::map<std::string, std::vector<TokenAnnotation>> read_conllu(std::istream& in);
std::string write_conllu(const std::string& sent_id, const std::string& text,
                         const std::vector<TokenAnnotation>& tokens);

/// Pattern-based parse of camera-wearer narrations ("C opens the fridge").
/// Labels follow the spaCy English scheme. Returns no tokens for text that
/// does not start with the C subject.
std::vector<TokenAnnotation> heuristic_parse(std::string_view text);

/// Lemma of an inflected verb form ("washes" -> "wash").
std::string lemmatize_verb(std::string_view form);
/// Singular of a plural noun form ("cups" -> "cup").
std::string lemmatize_noun(std::string_view form);

/// Verb, direct object and prepositional object nodes with their modifiers.
/// Understands both spaCy-style and Universal Dependencies labels.
std::vector<ActionNode> extract_nodes(const std::vector<TokenAnnotation>& tokens,
                                      std::size_t narration_index = 0);

/// Fills tokens (sidecar first, heuristic fallback) and nodes of every
/// narration in a clip. Throws a validation error when a narration has no
/// parse and the heuristic is disabled.
void annotate_clip(Clip& clip, const std::map<std::string, std::vector<TokenAnnotation>>& sidecar,
                   bool allow_heuristic);

void to_json(nlohmann::json& j, const TokenAnnotation& t);
void from_json(const nlohmann::json& j, TokenAnnotation& t);
void to_json(nlohmann::json& j, const ActionNode& n);
void from_json(const nlohmann::json& j, ActionNode& n);
void to_json(nlohmann::json& j, const Narration& n);
void from_json(const nlohmann::json& j, Narration& n);
void to_json(nlohmann::json& j, const Clip& c);
void from_json(const nlohmann::json& j, Clip& c);

}  // namespace mhqa
