#include "mhqa/metrics.hpp"

#include <cmath>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "mhqa/error.hpp"
#include "mhqa/lenient.hpp"
#include "mhqa/markers.hpp"
#include "mhqa/parallel.hpp"
#include "mhqa/prompts.hpp"

namespace mhqa::metrics {

using nlohmann::json;

double iou(const SpanSet& pred, const SpanSet& gt) {
  if (pred.empty() && gt.empty()) return 1.0;
  if (pred.empty() || gt.empty()) return 0.0;
  const double uni = total_length(unite(pred, gt));
  if (uni <= 0.0) {
    // Only zero-length spans on both sides: identical point sets match.
    return pred == gt ? 1.0 : 0.0;
  }
  return total_length(intersect(pred, gt)) / uni;
}

double iop(const SpanSet& pred, const SpanSet& gt) {
  const double denom = total_length(pred);
  if (denom <= 0.0) return 0.0;
  return total_length(intersect(pred, gt)) / denom;
}

double iog(const SpanSet& pred, const SpanSet& gt) {
  const double denom = total_length(gt);
  if (denom <= 0.0) return 0.0;
  return total_length(intersect(pred, gt)) / denom;
}

SampleScores score(const SpanSet& pred, const SpanSet& gt) {
  const double inter = total_length(intersect(pred, gt));
  const double p = total_length(pred);
  const double g = total_length(gt);
  SampleScores s;
  s.iou = iou(pred, gt);
  s.iop = p > 0.0 ? inter / p : 0.0;
  s.iog = g > 0.0 ? inter / g : 0.0;
  return s;
}

std::string threshold_key(double t) { return format_number(t); }

MetricReport aggregate(const std::vector<SampleEval>& samples,
                       const std::vector<double>& iou_thresholds,
                       const std::vector<double>& precision_thresholds) {
  if (samples.empty()) throw validation_error("cannot aggregate an empty sample list");
  MetricReport report;
  report.num_samples = samples.size();

  std::vector<double> ious;
  ious.reserve(samples.size());
  double sum_iou = 0.0, sum_iop = 0.0, sum_iog = 0.0;
  double qa_sum = 0.0, sim_sum = 0.0;
  std::size_t sim_count = 0;
  for (const auto& s : samples) {
    const auto scores = score(s.prediction, s.ground_truth);
    if (!report.per_sample.emplace(s.sample_id, scores).second) {
      throw validation_error("duplicate sample id '" + s.sample_id + "'",
                             {{"field", "sample_id"}});
    }
    ious.push_back(scores.iou);
    sum_iou += scores.iou;
    sum_iop += scores.iop;
    sum_iog += scores.iog;
    if (s.time_question) continue;
    if (s.judge_score) {
      qa_sum += *s.judge_score;
      ++report.qa_scored;
    }
    if (s.answer_similarity) {
      sim_sum += *s.answer_similarity;
      ++sim_count;
    }
  }
  const double n = static_cast<double>(samples.size());
  report.mean_iou = 100.0 * sum_iou / n;
  report.mean_iop = 100.0 * sum_iop / n;
  report.mean_iog = 100.0 * sum_iog / n;

  const auto rate = [&](double t) {
    const auto hits = std::count_if(ious.begin(), ious.end(), [t](double v) { return v > t; });
    return 100.0 * static_cast<double>(hits) / n;
  };
  for (double t : iou_thresholds) report.iou_at[t] = rate(t);
  for (double t : precision_thresholds) report.p_at[t] = rate(t);

  if (report.qa_scored > 0) report.qa_score_mean = qa_sum / static_cast<double>(report.qa_scored);
  if (sim_count > 0) report.qa_similarity_mean = 100.0 * sim_sum / static_cast<double>(sim_count);
  return report;
}

ChatRequest render_judge_request(const SampleEval& sample, const std::string& model) {
  if (!sample.question || !sample.reference_answer || !sample.predicted_answer) {
    throw validation_error("judging needs question, reference and predicted answer",
                           {{"sample_id", sample.sample_id}});
  }
  ChatRequest req;
  req.model = model;
  req.system = std::string(prompts::asset("system"));
  req.user = prompts::render(prompts::asset("judge"),
                             {{"question", *sample.question},
                              {"reference_answer", strip_markers(*sample.reference_answer)},
                              {"predicted_answer", strip_markers(*sample.predicted_answer)}});
  return req;
}

JudgeVerdict parse_judge_verdict(const std::string& raw) {
  const auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorKind::kJudgeFormat, "judge verdict " + why, {{"raw", raw}});
  };
  json obj;
  try {
    obj = parse_lenient_object(raw);
  } catch (const Error&) {
    throw fail("is not a dict");
  }
  const json* score = find_key_loose(obj, "score");
  if (!score) throw fail("has no score");
  int value = 0;
  if (score->is_number_integer()) {
    value = score->get<int>();
  } else if (score->is_number_float() && std::floor(score->get<double>()) == score->get<double>()) {
    value = static_cast<int>(score->get<double>());
  } else if (score->is_string()) {
    try {
      std::size_t used = 0;
      const std::string text = score->get<std::string>();
      value = std::stoi(text, &used);
      if (used != text.size()) throw fail("score is not an integer");
    } catch (const std::logic_error&) {
      throw fail("score is not an integer");
    }
  } else {
    throw fail("score is not an integer");
  }
  if (value < 1 || value > 10) throw fail("score " + std::to_string(value) + " is outside 1-10");
  JudgeVerdict verdict;
  verdict.score = value;
  if (const json* r = find_key_loose(obj, "rationale"); r && r->is_string()) {
    verdict.rationale = r->get<std::string>();
  }
  return verdict;
}

JudgeVerdict judge_qa(const SampleEval& sample, LlmClient& judge, const std::string& model) {
  return parse_judge_verdict(judge.complete(render_judge_request(sample, model)));
}

namespace {

bool qa_ready(const SampleEval& s) {
  return !s.time_question && s.question && s.reference_answer && s.predicted_answer;
}

}  // namespace

void judge_all(std::vector<SampleEval>& samples, LlmClient& judge, const std::string& model,
               std::size_t parallelism) {
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (qa_ready(samples[i])) todo.push_back(i);
  }
  const auto verdicts = parallel_map(todo.size(), parallelism, [&](std::size_t k) {
    return judge_qa(samples[todo[k]], judge, model);
  });
  for (std::size_t k = 0; k < todo.size(); ++k) samples[todo[k]].judge_score = verdicts[k].score;
}

void score_answer_similarity(std::vector<SampleEval>& samples, EmbeddingClient& embedder) {
  std::vector<std::size_t> todo;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!qa_ready(samples[i])) continue;
    todo.push_back(i);
    texts.push_back(strip_markers(*samples[i].predicted_answer));
    texts.push_back(strip_markers(*samples[i].reference_answer));
  }
  if (todo.empty()) return;
  const auto vectors = embedder.embed(texts);
  for (std::size_t k = 0; k < todo.size(); ++k) {
    const auto& a = vectors[2 * k];
    const auto& b = vectors[2 * k + 1];
    if (a.size() != b.size() || a.empty()) {
      throw Error(ErrorKind::kTransport, "embedding dimensions disagree",
                  {{"sample_id", samples[todo[k]].sample_id}});
    }
    const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
    const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    samples[todo[k]].answer_similarity = (na > 0.0 && nb > 0.0) ? dot / (na * nb) : 0.0;
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

struct Section {
  std::string name;
  std::size_t header_begin;
  std::size_t body_begin;
};

std::vector<Section> find_sections(const std::string& text) {
  static const std::regex header(
      R"((?:^|\n)[ \t]*(?:#{1,6}[ \t]*\**[ \t]*(answer|evidence|rationale)\**[ \t]*:?|\**(answer|evidence|rationale)\**[ \t]*:))",
      std::regex::icase);
  std::vector<Section> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), header);
       it != std::sregex_iterator(); ++it) {
    std::string name = (*it)[1].matched ? (*it)[1].str() : (*it)[2].str();
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back({name, static_cast<std::size_t>(it->position(0)),
                   static_cast<std::size_t>(it->position(0) + it->length(0))});
  }
  return out;
}

}  // namespace

ParsedResponse parse_model_response(const std::string& text) {
  ParsedResponse out;
  const auto sections = find_sections(text);
  const auto body_of = [&](std::size_t i) {
    const std::size_t end =
        i + 1 < sections.size() ? sections[i + 1].header_begin : text.size();
    return std::string_view(text).substr(sections[i].body_begin, end - sections[i].body_begin);
  };

  std::string_view evidence_region = text;
  std::optional<std::size_t> first_header;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (!first_header) first_header = sections[i].header_begin;
    if (sections[i].name == "answer" && !out.answer_section_found) {
      out.answer = trim(body_of(i));
      out.answer_section_found = true;
    } else if (sections[i].name == "evidence" && evidence_region.data() == text.data() &&
               evidence_region.size() == text.size()) {
      evidence_region = body_of(i);
    }
  }
  if (!out.answer_section_found) {
    out.answer = trim(first_header ? std::string_view(text).substr(0, *first_header)
                                   : std::string_view(text));
  }

  static const std::regex pair(
      R"(\[\s*(-?\d+(?:\.\d+)?)\s*s?\s*,\s*(-?\d+(?:\.\d+)?)\s*s?\s*\])");
  std::vector<TimeSpan> raw;
  const std::string region(evidence_region);
  for (auto it = std::sregex_iterator(region.begin(), region.end(), pair);
       it != std::sregex_iterator(); ++it) {
    double s = std::stod((*it)[1].str());
    double e = std::stod((*it)[2].str());
    if (!std::isfinite(s) || !std::isfinite(e) || s < 0.0 || e < 0.0) {
      out.dropped_invalid = true;
      continue;
    }
    if (s > e) {
      std::swap(s, e);
      out.repaired_reversed = true;
    }
    raw.push_back({s, e});
  }
  out.evidence_found = !raw.empty();
  out.evidence = normalize(raw);
  return out;
}

json to_json(const MetricReport& report) {
  json j;
  j["num_samples"] = report.num_samples;
  j["mIoU"] = report.mean_iou;
  j["mIoP"] = report.mean_iop;
  j["mIoG"] = report.mean_iog;
  json iou_at = json::object();
  for (const auto& [t, v] : report.iou_at) iou_at[threshold_key(t)] = v;
  json p_at = json::object();
  for (const auto& [t, v] : report.p_at) p_at[threshold_key(t)] = v;
  j["iou_at"] = iou_at;
  j["p_at"] = p_at;
  j["qa_scored"] = report.qa_scored;
  j["qa_score_mean"] = report.qa_score_mean ? json(*report.qa_score_mean) : json(nullptr);
  j["qa_similarity_mean"] =
      report.qa_similarity_mean ? json(*report.qa_similarity_mean) : json(nullptr);
  json per = json::object();
  for (const auto& [id, s] : report.per_sample) {
    per[id] = {{"iou", s.iou}, {"iop", s.iop}, {"iog", s.iog}};
  }
  j["per_sample"] = per;
  return j;
}

std::string per_sample_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "sample_id,iou,iop,iog\n";
  for (const auto& [id, s] : report.per_sample) {
    if (id.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char c : id) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << id;
    }
    out << ',' << format_number(s.iou) << ',' << format_number(s.iop) << ','
        << format_number(s.iog) << '\n';
  }
  return out.str();
}

namespace {

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<T>();
  return std::nullopt;
}

}  // namespace

SampleEval sample_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("sample must be a JSON object");
  SampleEval s;
  try {
    if (j.contains("sample_id")) {
      s.sample_id = j.at("sample_id").get<std::string>();
    } else {
      throw validation_error("sample is missing sample_id", {{"field", "sample_id"}});
    }
    if (j.contains("prediction")) s.prediction = j.at("prediction").get<SpanSet>();
    if (j.contains("ground_truth")) s.ground_truth = j.at("ground_truth").get<SpanSet>();
    s.predicted_answer = optional_field<std::string>(j, "predicted_answer");
    s.reference_answer = optional_field<std::string>(j, "reference_answer");
    s.question = optional_field<std::string>(j, "question");
    s.time_question = j.value("time_question", false);
    s.judge_score = optional_field<int>(j, "judge_score");
    s.answer_similarity = optional_field<double>(j, "answer_similarity");
  } catch (const json::exception& e) {
    throw validation_error(std::string("malformed sample: ") + e.what());
  }
  return s;
}

json to_json(const SampleEval& s) {
  json j{{"sample_id", s.sample_id}, {"prediction", s.prediction}, {"ground_truth", s.ground_truth}};
  if (s.predicted_answer) j["predicted_answer"] = *s.predicted_answer;
  if (s.reference_answer) j["reference_answer"] = *s.reference_answer;
  if (s.question) j["question"] = *s.question;
  if (s.time_question) j["time_question"] = true;
  if (s.judge_score) j["judge_score"] = *s.judge_score;
  if (s.answer_similarity) j["answer_similarity"] = *s.answer_similarity;
  return j;
}

}  // namespace mhqa::metrics
