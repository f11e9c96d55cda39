#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/llm_client.hpp"
#include "mhqa/miner.hpp"
#include "mhqa/narrations.hpp"
#include "mhqa/store.hpp"

namespace mhqa {

using Sidecar = std::map<std::string, std::vector<TokenAnnotation>>;
using ProgressFn = std::function<void(const std::string& stage, const nlohmann::json& counts)>;

struct PipelineOptions {
  ClipRules clip_rules;
  MiningRules mining_rules;
  std::string generation_model = "gpt-4o";
  std::string filter_model = "gpt-4o";
  double temperature = 0.0;
  bool json_mode = true;
  std::size_t parallelism = 4;
  std::size_t max_retries = 2;
  bool allow_heuristic = true;
  std::string run_id = "pipeline";
  nlohmann::json config = nlohmann::json::object();  // recorded with the run
  ProgressFn progress;
};

/// Segments every video of a canonicalized corpus into clips and annotates
/// their narrations. Videos without a duration use their last narration
/// start; a note is appended to `warnings`.
std::vector<Clip> build_clips(const Corpus& corpus, const Sidecar& sidecar, bool allow_heuristic,
                              std::vector<std::string>* warnings = nullptr);

/// Stores every clip with its filter decision. Returns {accepted, rejected}.
nlohmann::json stage_segment(Store& store, const std::vector<Clip>& clips, const ClipRules& rules);

/// Mines candidates from the accepted clips in the store.
nlohmann::json stage_mine(Store& store, const MiningRules& rules);

/// Generates a triplet (or a rejection) for every candidate that has neither.
/// Transport failures left after retries write <store>/checkpoint.json and
/// throw Error{kTransport}; successful results are kept.
nlohmann::json stage_generate(Store& store, LlmClient& client, const PipelineOptions& opts);

/// Runs the filtration prompt on every triplet in status generated.
nlohmann::json stage_filter(Store& store, LlmClient& client, const PipelineOptions& opts);

/// Stage counts recomputed from the store contents.
nlohmann::json store_counts(const Store& store);

/// segment -> filter -> mine -> generate -> parse -> llm_filter, then
/// compaction and a run record in `runs`. Re-running after a transport
/// failure resumes where the previous run stopped.
nlohmann::json run_pipeline(const Corpus& corpus, const Sidecar& sidecar, LlmClient& client,
                            Store& store, const PipelineOptions& opts);

std::filesystem::path checkpoint_path(const Store& store);

}  // namespace mhqa
