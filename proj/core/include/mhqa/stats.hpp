#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhqa/spans.hpp"

namespace mhqa {

struct StatsSample {
  std::string question;
  std::string answer;
  SpanSet evidence;
};

struct DatasetStats {
  std::size_t samples = 0;
  std::size_t spans = 0;
  double mean_duration = 0.0;  // seconds per span
  double median_duration = 0.0;
  double mean_hops = 0.0;      // spans per sample
  std::size_t max_hops = 0;
  double mean_question_words = 0.0;
  double mean_answer_words = 0.0;
  std::map<double, std::size_t> duration_histogram;  // bin start (5 s bins) -> count
  std::map<std::size_t, std::size_t> hop_histogram;
  std::map<std::size_t, std::size_t> question_word_histogram;
  std::map<std::size_t, std::size_t> answer_word_histogram;
};

/// Reads question, answer and evidence from a benchmark-style record. Spans
/// may come from span_map, time_span, "Time span", evidence or spans, either
/// as a marker map or a list of pairs.
StatsSample stats_sample_from_json(const nlohmann::json& j);

/// Whitespace token count after removing grounding markers.
std::size_t word_count(const std::string& text);

DatasetStats compute_stats(const std::vector<StatsSample>& samples, double duration_bin = 5.0);

nlohmann::json to_json(const DatasetStats& s);

/// Records from a JSON array file or JSON Lines.
std::vector<nlohmann::json> read_records(const std::string& path);

}  // namespace mhqa
