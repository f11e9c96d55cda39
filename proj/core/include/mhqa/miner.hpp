#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/narrations.hpp"

namespace mhqa {

struct ClipRules {
  std::size_t min_narrations = 30;
  std::size_t max_narrations = 60;
  double min_extent = 150.0;  // seconds between first and last narration start
};

struct MiningRules {
  std::size_t t_min = 2;
  std::size_t t_max = 5;
  double min_extent = 10.0;  // seconds from first occurrence start to last occurrence end
};

struct ClipDecision {
  bool accept = false;
  std::string reason;  // "too_many_narrations", "too_few_narrations", "short_extent"
  std::size_t narration_count = 0;
  double extent = 0.0;
};

ClipDecision filter_clip(const Clip& clip, const ClipRules& rules = {});

struct NodeKey {
  Attribute attribute = Attribute::kVerb;
  std::string lemma_key;

  friend bool operator==(const NodeKey&, const NodeKey&) = default;
  friend bool operator<(const NodeKey& a, const NodeKey& b) {
    if (a.lemma_key != b.lemma_key) return a.lemma_key < b.lemma_key;
    return a.attribute < b.attribute;
  }
};

struct Occurrence {
  ActionNode node;
  TimeSpan span;
};

struct SceneGraph {
  std::string clip_id;
  std::vector<Occurrence> occurrences;
  std::map<NodeKey, std::vector<std::size_t>> index;  // positions in occurrences
};

/// One occurrence per distinct (attribute, lemma_key) per narration, carrying
/// the narration's span.
SceneGraph build_graph(const Clip& clip);

struct MiningCandidate {
  std::string candidate_id;
  std::string clip_id;
  NodeKey node;
  std::string surface;
  std::vector<Narration> narrations;  // N_u in time order
  std::size_t recurrence_count = 0;
  double span_extent = 0.0;
};

/// Nodes recurring t_min < count < t_max times whose occurrences spread over
/// more than min_extent seconds. Sorted by (clip_id, lemma_key, attribute).
std::vector<MiningCandidate> find_candidates(const SceneGraph& graph, const Clip& clip,
                                             const MiningRules& rules = {});

/// "<clip_id>.<attribute>.<lemma_key with non-alphanumerics as _>".
std::string make_candidate_id(const std::string& clip_id, const NodeKey& key);

void to_json(nlohmann::json& j, const ClipDecision& d);
void to_json(nlohmann::json& j, const MiningCandidate& c);
void from_json(const nlohmann::json& j, MiningCandidate& c);

}  // namespace mhqa
