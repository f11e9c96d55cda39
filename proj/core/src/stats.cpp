#include "mhqa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mhqa/error.hpp"
#include "mhqa/lenient.hpp"
#include "mhqa/markers.hpp"

namespace mhqa {

using nlohmann::json;

namespace {

void collect_pairs(const json& v, std::vector<TimeSpan>& out, const std::string& field) {
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    TimeSpan s{v[0].get<double>(), v[1].get<double>()};
    if (s.start > s.end) std::swap(s.start, s.end);
    out.push_back(s);
    return;
  }
  if (v.is_array()) {
    for (const auto& x : v) collect_pairs(x, out, field);
    return;
  }
  if (v.is_object()) {
    for (const auto& [key, x] : v.items()) collect_pairs(x, out, field);
    return;
  }
  throw validation_error("cannot read spans from " + field, {{"field", field}});
}

std::string text_field(const json& j, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (const json* v = find_key_loose(j, n); v && v->is_string()) return v->get<std::string>();
  }
  return {};
}

}  // namespace

StatsSample stats_sample_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("record must be an object");
  StatsSample s;
  s.question = text_field(j, {"question", "Q"});
  s.answer = text_field(j, {"answer", "A"});
  std::vector<TimeSpan> raw;
  bool found = false;
  for (const char* n : {"span_map", "time span", "evidence", "spans", "ground_truth"}) {
    if (const json* v = find_key_loose(j, n)) {
      collect_pairs(*v, raw, n);
      found = true;
      break;
    }
  }
  if (!found) throw validation_error("record has no spans", {{"field", "span_map"}});
  s.evidence = normalize(raw);
  return s;
}

std::size_t word_count(const std::string& text) {
  std::stringstream ss(strip_markers(text));
  std::size_t n = 0;
  std::string w;
  while (ss >> w) ++n;
  return n;
}

DatasetStats compute_stats(const std::vector<StatsSample>& samples, double duration_bin) {
  if (!(duration_bin > 0.0)) throw validation_error("duration bin must be positive");
  DatasetStats st;
  st.samples = samples.size();
  if (samples.empty()) return st;
  std::vector<double> durations;
  double qwords = 0.0, awords = 0.0;
  for (const auto& s : samples) {
    const std::size_t hops = s.evidence.size();
    st.hop_histogram[hops]++;
    st.max_hops = std::max(st.max_hops, hops);
    for (const auto& span : s.evidence) {
      durations.push_back(span.length());
      st.duration_histogram[std::floor(span.length() / duration_bin) * duration_bin]++;
    }
    const auto q = word_count(s.question);
    const auto a = word_count(s.answer);
    st.question_word_histogram[q]++;
    st.answer_word_histogram[a]++;
    qwords += static_cast<double>(q);
    awords += static_cast<double>(a);
  }
  const double n = static_cast<double>(samples.size());
  st.spans = durations.size();
  st.mean_hops = static_cast<double>(durations.size()) / n;
  st.mean_question_words = qwords / n;
  st.mean_answer_words = awords / n;
  if (!durations.empty()) {
    double sum = 0.0;
    for (double d : durations) sum += d;
    st.mean_duration = sum / static_cast<double>(durations.size());
    std::sort(durations.begin(), durations.end());
    const std::size_t m = durations.size() / 2;
    st.median_duration =
        durations.size() % 2 ? durations[m] : 0.5 * (durations[m - 1] + durations[m]);
  }
  return st;
}

json to_json(const DatasetStats& s) {
  const auto hist = [](const auto& h) {
    json a = json::array();
    for (const auto& [bin, count] : h) a.push_back({json_number(static_cast<double>(bin)), count});
    return a;
  };
  return json{{"samples", s.samples},
              {"spans", s.spans},
              {"mean_evidence_duration", s.mean_duration},
              {"median_evidence_duration", s.median_duration},
              {"mean_hops", s.mean_hops},
              {"max_hops", s.max_hops},
              {"mean_question_words", s.mean_question_words},
              {"mean_answer_words", s.mean_answer_words},
              {"histograms",
               {{"evidence_duration", hist(s.duration_histogram)},
                {"hops", hist(s.hop_histogram)},
                {"question_words", hist(s.question_word_histogram)},
                {"answer_words", hist(s.answer_word_histogram)}}}};
}

std::vector<json> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<json> out;
  if (first == std::string::npos) return out;
  if (text[first] == '[') {
    try {
      for (auto& r : json::parse(text)) out.push_back(std::move(r));
    } catch (const json::parse_error& e) {
      throw validation_error(path + ": " + e.what());
    }
    return out;
  }
  std::stringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw validation_error(path + ":" + std::to_string(number) + ": " + e.what(),
                             {{"line", number}});
    }
  }
  return out;
}

}  // namespace mhqa
