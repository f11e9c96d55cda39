#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mhqa/llm_client.hpp"
#include "mhqa/miner.hpp"
#include "mhqa/triplet.hpp"

namespace mhqa {

struct Rejection {
  std::string rejection_id;  // candidate id
  std::string candidate_id;
  std::string clip_id;
  std::string stage;  // "generation"
  Violation violation;
  std::string raw;
  Provenance provenance;
};

nlohmann::json to_json(const Rejection& r);

/// Template id for a candidate attribute: generate_verb, generate_dobj, generate_pobj.
std::string template_id_for(Attribute a);

/// "start, end, description" rows, one per narration, in narration order.
std::string narration_rows(const MiningCandidate& c);

ChatRequest render_prompt(const MiningCandidate& c, const std::string& model,
                          double temperature = 0.0, bool json_mode = true);

struct GenerationOutcome {
  std::optional<Triplet> triplet;
  std::optional<Violation> violation;
  std::vector<std::string> repairs;
};

/// Parses a generation reply into a triplet, or reports why it was rejected.
/// Never throws on malformed model output.
GenerationOutcome parse_generation(const std::string& raw, double clip_length = 180.0);

/// Python-literal style QA sample fed to the filtration prompt with markers
/// removed from the answer.
std::string qa_sample(const Triplet& t);

ChatRequest render_filter_request(const Triplet& t, const std::string& model,
                                  double temperature = 0.0, bool json_mode = true);

struct FilterVerdict {
  bool keep = false;
  int judgement = 0;
  std::string rationale;
};

/// Parses {'Judgement': 0|1, 'Rationale': ...}. Throws Error{kFormat} with
/// the raw text in details otherwise.
FilterVerdict parse_filter_verdict(const std::string& raw);

FilterVerdict llm_filter(const Triplet& t, LlmClient& client, const std::string& model);

}  // namespace mhqa
