#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/config.hpp"
#include "mhqa/llm_client.hpp"
#include "mhqa/metrics.hpp"

namespace mhqa::cli {

/// Runs the command line tool in-process. `args` excludes the program name.
/// Returns the process exit code: 0 ok, 2 validation, 3 transport, 4 integrity.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Chat client per llm.mode: http, replay (fixtures only) or record (http
/// plus fixture capture). Wrapped in a rate limiter when min_interval_ms > 0.
std::shared_ptr<LlmClient> make_llm_client(const RunConfig& cfg);
std::unique_ptr<EmbeddingClient> make_embedding_client(const RunConfig& cfg);

/// Joins prediction and ground-truth records on sample_id. A prediction may
/// give spans directly (prediction / evidence / spans) or a free-form
/// `response` that is parsed. Samples without a prediction score as empty.
std::vector<metrics::SampleEval> join_eval_inputs(const std::vector<nlohmann::json>& predictions,
                                                  const std::vector<nlohmann::json>& ground_truth);

}  // namespace mhqa::cli
