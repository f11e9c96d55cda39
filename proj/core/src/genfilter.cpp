#include "mhqa/genfilter.hpp"

#include <regex>

#include "mhqa/error.hpp"
#include "mhqa/lenient.hpp"
#include "mhqa/markers.hpp"
#include "mhqa/prompts.hpp"

namespace mhqa {

using nlohmann::json;

json to_json(const Rejection& r) {
  return json{{"rejection_id", r.rejection_id},
              {"candidate_id", r.candidate_id},
              {"clip_id", r.clip_id},
              {"stage", r.stage},
              {"reason", r.violation.code},
              {"message", r.violation.message},
              {"field", r.violation.field},
              {"raw", r.raw},
              {"provenance",
               {{"template_id", r.provenance.template_id},
                {"model", r.provenance.model},
                {"prompt_version", r.provenance.prompt_version},
                {"repairs", r.provenance.repairs}}}};
}

std::string template_id_for(Attribute a) { return "generate_" + std::string(to_string(a)); }

std::string narration_rows(const MiningCandidate& c) {
  std::string out;
  for (const auto& n : c.narrations) {
    if (!out.empty()) out += '\n';
    out += format_number(n.start) + ", " + format_number(n.end) + ", " + n.text;
  }
  return out;
}

ChatRequest render_prompt(const MiningCandidate& c, const std::string& model, double temperature,
                          bool json_mode) {
  if (c.narrations.empty()) {
    throw validation_error("candidate " + c.candidate_id + " has no narrations");
  }
  ChatRequest req;
  req.model = model;
  req.temperature = temperature;
  req.json_mode = json_mode;
  req.system = std::string(prompts::asset("system"));
  req.user = prompts::render(prompts::asset(template_id_for(c.node.attribute)),
                             {{"narration_rows", narration_rows(c)}});
  return req;
}

namespace {

std::string normalize_marker_key(std::string key) {
  key.erase(std::remove_if(key.begin(), key.end(), [](unsigned char c) { return std::isspace(c); }),
            key.end());
  static const std::regex bare(R"(T\d+)");
  if (std::regex_match(key, bare)) return "<" + key + ">";
  return key;
}

}  // namespace

GenerationOutcome parse_generation(const std::string& raw, double clip_length) {
  GenerationOutcome out;
  const auto reject = [&](std::string code, std::string message, std::string field) {
    out.violation = Violation{std::move(code), std::move(message), std::move(field)};
    return out;
  };
  json obj;
  try {
    obj = parse_lenient_object(raw);
  } catch (const Error& e) {
    return reject("unparseable", e.what(), "");
  }
  const json* question = find_key_loose(obj, "question");
  if (!question || !question->is_string()) return reject("missing_field", "no Question", "Question");
  const json* answer = find_key_loose(obj, "answer");
  if (!answer || !answer->is_string()) return reject("missing_field", "no Answer", "Answer");
  const json* spans = find_key_loose(obj, "time span");
  if (!spans) spans = find_key_loose(obj, "time spans");
  if (!spans) spans = find_key_loose(obj, "span_map");
  if (!spans) return reject("missing_field", "no Time span", "Time span");
  if (!spans->is_object()) return reject("unparseable", "Time span is not a mapping", "Time span");

  Triplet t;
  t.question = question->get<std::string>();
  t.answer = repair_duplicate_openings(answer->get<std::string>(), out.repairs);

  json keyed = json::object();
  for (auto it = spans->begin(); it != spans->end(); ++it) {
    const auto key = normalize_marker_key(it.key());
    if (keyed.contains(key)) return reject("marker_key_mismatch", "duplicate key " + key, "Time span");
    keyed[key] = it.value();
  }
  try {
    t.span_map = span_map_from_json(keyed);
  } catch (const Error& e) {
    std::string field = e.details().value("field", std::string("Time span"));
    return reject("unparseable", e.what(), field);
  }
  if (auto v = validate_triplet(t, clip_length)) {
    out.violation = *v;
    return out;
  }
  t.provenance.repairs = out.repairs;
  out.triplet = std::move(t);
  return out;
}

namespace {

std::string py_repr(const std::string& s) {
  const bool has_single = s.find('\'') != std::string::npos;
  const bool has_double = s.find('"') != std::string::npos;
  const char quote = has_single && !has_double ? '"' : '\'';
  std::string out(1, quote);
  for (char c : s) {
    if (c == '\\' || c == quote) out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back(quote);
  return out;
}

}  // namespace

std::string qa_sample(const Triplet& t) {
  return "{'Q': " + py_repr(t.question) + ", 'A': " + py_repr(strip_markers(t.answer)) + "}";
}

ChatRequest render_filter_request(const Triplet& t, const std::string& model, double temperature,
                                  bool json_mode) {
  ChatRequest req;
  req.model = model;
  req.temperature = temperature;
  req.json_mode = json_mode;
  req.system = std::string(prompts::asset("system"));
  req.user = prompts::render(prompts::asset("filter"), {{"qa_sample", qa_sample(t)}});
  return req;
}

FilterVerdict parse_filter_verdict(const std::string& raw) {
  const auto fail = [&](const std::string& why) {
    return Error(ErrorKind::kFormat, "filter verdict " + why, {{"raw", raw}});
  };
  json obj;
  try {
    obj = parse_lenient_object(raw);
  } catch (const Error&) {
    throw fail("is not a dict");
  }
  const json* j = find_key_loose(obj, "judgement");
  if (!j) j = find_key_loose(obj, "judgment");
  if (!j) throw fail("has no Judgement");
  int value = -1;
  if (j->is_number_integer()) {
    value = j->get<int>();
  } else if (j->is_string() && (j->get<std::string>() == "0" || j->get<std::string>() == "1")) {
    value = j->get<std::string>()[0] - '0';
  }
  if (value != 0 && value != 1) throw fail("Judgement must be 0 or 1");
  FilterVerdict v;
  v.judgement = value;
  v.keep = value == 0;
  if (const json* r = find_key_loose(obj, "rationale"); r && r->is_string()) {
    v.rationale = r->get<std::string>();
  }
  return v;
}

FilterVerdict llm_filter(const Triplet& t, LlmClient& client, const std::string& model) {
  return parse_filter_verdict(client.complete(render_filter_request(t, model)));
}

}  // namespace mhqa
