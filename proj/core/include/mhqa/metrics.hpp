#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/llm_client.hpp"
#include "mhqa/spans.hpp"

namespace mhqa::metrics {

struct SampleEval {
  std::string sample_id;
  SpanSet prediction;
  SpanSet ground_truth;
  std::optional<std::string> predicted_answer;
  std::optional<std::string> reference_answer;
  std::optional<std::string> question;
  // Questions asking "when" are scored by grounding only.
  bool time_question = false;
  // Filled by judge_qa / answer similarity when QA scoring runs.
  std::optional<int> judge_score;
  std::optional<double> answer_similarity;
};

struct SampleScores {
  double iou = 0.0;
  double iop = 0.0;
  double iog = 0.0;
};

struct MetricReport {
  std::map<std::string, SampleScores> per_sample;
  std::size_t num_samples = 0;
  double mean_iou = 0.0;  // percent
  double mean_iop = 0.0;  // percent
  double mean_iog = 0.0;  // percent
  std::map<double, double> iou_at;  // threshold -> percent of samples with iou > threshold
  std::map<double, double> p_at;
  std::optional<double> qa_score_mean;       // 1-10 scale
  std::optional<double> qa_similarity_mean;  // percent
  std::size_t qa_scored = 0;
};

struct JudgeVerdict {
  int score = 0;
  std::string rationale;
};

/// Intersection over union of covered measure. Both empty -> 1, one empty -> 0.
double iou(const SpanSet& pred, const SpanSet& gt);
/// Intersection over prediction measure; 0 when the prediction has no measure.
double iop(const SpanSet& pred, const SpanSet& gt);
/// Intersection over ground-truth measure; 0 when the ground truth has no measure.
double iog(const SpanSet& pred, const SpanSet& gt);

SampleScores score(const SpanSet& pred, const SpanSet& gt);

/// Corpus means (x100) and threshold rates. Throws a validation error on an
/// empty sample list. QA means skip samples flagged time_question.
MetricReport aggregate(const std::vector<SampleEval>& samples,
                       const std::vector<double>& iou_thresholds = {0.3},
                       const std::vector<double>& precision_thresholds = {0.5});

/// Renders the judge prompt with question, reference and predicted answer.
ChatRequest render_judge_request(const SampleEval& sample, const std::string& model);

/// Parses a judge reply such as "{'score': 5, 'rationale': '...'}".
/// Throws Error{kJudgeFormat} carrying the raw text on any violation.
JudgeVerdict parse_judge_verdict(const std::string& raw);

JudgeVerdict judge_qa(const SampleEval& sample, LlmClient& judge, const std::string& model);

/// Judges every non-time sample with bounded parallelism and stores the
/// score in SampleEval::judge_score.
void judge_all(std::vector<SampleEval>& samples, LlmClient& judge, const std::string& model,
               std::size_t parallelism);

/// Cosine similarity of answer embeddings, stored in answer_similarity.
void score_answer_similarity(std::vector<SampleEval>& samples, EmbeddingClient& embedder);

struct ParsedResponse {
  std::string answer;
  SpanSet evidence;
  bool answer_section_found = false;
  bool evidence_found = false;
  bool repaired_reversed = false;
  bool dropped_invalid = false;
};

/// Extracts the Answer section and every [s, e] pair from a baseline's
/// "Answer / Evidence / Rationale" response. Never throws.
ParsedResponse parse_model_response(const std::string& text);

nlohmann::json to_json(const MetricReport& report);
std::string per_sample_csv(const MetricReport& report);

SampleEval sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SampleEval& sample);

/// "0.3" style key for threshold maps.
std::string threshold_key(double t);

}  // namespace mhqa::metrics
