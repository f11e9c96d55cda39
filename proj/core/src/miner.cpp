#include "mhqa/miner.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mhqa/error.hpp"

namespace mhqa {

using nlohmann::json;

ClipDecision filter_clip(const Clip& clip, const ClipRules& rules) {
  ClipDecision d;
  d.narration_count = clip.narrations.size();
  if (!clip.narrations.empty()) {
    d.extent = clip.narrations.back().start - clip.narrations.front().start;
  }
  if (d.narration_count > rules.max_narrations) {
    d.reason = "too_many_narrations";
  } else if (d.narration_count < rules.min_narrations) {
    d.reason = "too_few_narrations";
  } else if (d.extent < rules.min_extent) {
    d.reason = "short_extent";
  } else {
    d.accept = true;
  }
  return d;
}

SceneGraph build_graph(const Clip& clip) {
  SceneGraph g;
  g.clip_id = clip.clip_id;
  for (const auto& n : clip.narrations) {
    std::set<NodeKey> seen;
    for (const auto& node : n.nodes) {
      NodeKey key{node.attribute, node.lemma_key};
      if (!seen.insert(key).second) continue;
      g.index[key].push_back(g.occurrences.size());
      g.occurrences.push_back({node, n.span()});
    }
  }
  return g;
}

std::string make_candidate_id(const std::string& clip_id, const NodeKey& key) {
  std::string slug;
  for (char c : key.lemma_key) {
    slug.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  return clip_id + "." + std::string(to_string(key.attribute)) + "." + slug;
}

std::vector<MiningCandidate> find_candidates(const SceneGraph& graph, const Clip& clip,
                                             const MiningRules& rules) {
  if (graph.clip_id != clip.clip_id) {
    throw validation_error("scene graph " + graph.clip_id + " does not belong to clip " +
                           clip.clip_id);
  }
  std::vector<MiningCandidate> out;
  std::set<std::string> ids;
  // The index is ordered by (lemma_key, attribute) already.
  for (const auto& [key, positions] : graph.index) {
    const std::size_t count = positions.size();
    if (!(count > rules.t_min && count < rules.t_max)) continue;
    double first = graph.occurrences[positions.front()].span.start;
    double last = graph.occurrences[positions.front()].span.end;
    for (auto p : positions) {
      first = std::min(first, graph.occurrences[p].span.start);
      last = std::max(last, graph.occurrences[p].span.end);
    }
    const double extent = last - first;
    if (!(extent > rules.min_extent)) continue;

    MiningCandidate c;
    c.clip_id = clip.clip_id;
    c.node = key;
    c.candidate_id = make_candidate_id(clip.clip_id, key);
    for (int suffix = 2; !ids.insert(c.candidate_id).second; ++suffix) {
      c.candidate_id = make_candidate_id(clip.clip_id, key) + "-" + std::to_string(suffix);
    }
    c.surface = graph.occurrences[positions.front()].node.surface;
    c.recurrence_count = count;
    c.span_extent = extent;
    for (auto p : positions) {
      const auto idx = graph.occurrences[p].node.narration_index;
      if (idx >= clip.narrations.size()) {
        throw validation_error("node refers to narration " + std::to_string(idx) +
                               " outside clip " + clip.clip_id);
      }
      c.narrations.push_back(clip.narrations[idx]);
    }
    out.push_back(std::move(c));
  }
  return out;
}

void to_json(json& j, const ClipDecision& d) {
  j = json{{"accept", d.accept},
           {"reason", d.reason},
           {"narration_count", d.narration_count},
           {"extent", json_number(d.extent)}};
}

void to_json(json& j, const MiningCandidate& c) {
  json narrations = json::array();
  for (const auto& n : c.narrations) {
    narrations.push_back({{"narration_id", n.narration_id},
                          {"start", json_number(n.start)},
                          {"end", json_number(n.end)},
                          {"text", n.text}});
  }
  j = json{{"candidate_id", c.candidate_id},
           {"clip_id", c.clip_id},
           {"attribute", to_string(c.node.attribute)},
           {"lemma_key", c.node.lemma_key},
           {"surface", c.surface},
           {"recurrence_count", c.recurrence_count},
           {"span_extent", json_number(c.span_extent)},
           {"narrations", narrations}};
}

void from_json(const json& j, MiningCandidate& c) {
  c.candidate_id = j.at("candidate_id").get<std::string>();
  c.clip_id = j.at("clip_id").get<std::string>();
  c.node.attribute = attribute_from_string(j.at("attribute").get<std::string>());
  c.node.lemma_key = j.at("lemma_key").get<std::string>();
  c.surface = j.value("surface", c.node.lemma_key);
  c.recurrence_count = j.value("recurrence_count", std::size_t{0});
  c.span_extent = j.value("span_extent", 0.0);
  c.narrations.clear();
  for (const auto& n : j.at("narrations")) {
    Narration x;
    x.narration_id = n.value("narration_id", std::string());
    x.start = n.at("start").get<double>();
    x.end = n.at("end").get<double>();
    x.text = n.at("text").get<std::string>();
    c.narrations.push_back(std::move(x));
  }
}

}  // namespace mhqa
