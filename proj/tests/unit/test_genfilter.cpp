#include <gtest/gtest.h>

#include "mhqa/error.hpp"
#include "mhqa/genfilter.hpp"
#include "mhqa/lenient.hpp"
#include "mhqa/markers.hpp"
#include "mhqa/narrations.hpp"
#include "mhqa/prompts.hpp"
#include "scripted_llm.hpp"

using namespace mhqa;
using nlohmann::json;

namespace {

std::vector<TimeSpan> spans(std::initializer_list<TimeSpan> l) { return l; }

MiningCandidate candidate(Attribute a, std::vector<std::pair<double, std::string>> rows) {
  MiningCandidate c;
  c.clip_id = "v_000";
  c.node = NodeKey{a, "lady b"};
  c.candidate_id = make_candidate_id(c.clip_id, c.node);
  for (auto& [s, t] : rows) {
    Narration n;
    n.start = s;
    n.text = t;
    c.narrations.push_back(n);
  }
  c.narrations = derive_end_times(c.narrations);
  c.recurrence_count = c.narrations.size();
  return c;
}

Triplet valid_triplet() {
  Triplet t;
  t.triplet_id = "v_000.dobj.cup";
  t.clip_id = "v_000";
  t.question = "What did I wash?";
  t.answer = "You washed <T1>the cup</T1> and <T2>the plate</T2>.";
  t.span_map = {{"<T1>", {{10, 12}}}, {"<T2>", {{40, 44}, {60, 61}}}};
  return t;
}

class Canned final : public LlmClient {
 public:
  explicit Canned(std::string r) : reply(std::move(r)) {}
  std::string complete(const ChatRequest& req) override {
    last = req;
    return reply;
  }
  std::string id() const override { return "canned"; }
  std::string reply;
  ChatRequest last;
};

}  // namespace

TEST(Markers, StrictGrammar) {
  EXPECT_TRUE(check_markers("a <T1>b</T1> c <T2>d</T2>").ok);
  EXPECT_EQ(check_markers("<T2>x</T2><T1>y</T1>").keys, (std::vector<std::string>{"<T2>", "<T1>"}));
  for (const char* bad : {"<T1>x", "x</T1>", "<T1><T2>x</T2></T1>", "<T1>a</T2>",
                          "<T1>a</T1> <T1>b</T1>", "<T>a</T>", "<T1>a<T1>b</T1>"}) {
    EXPECT_FALSE(check_markers(bad).ok) << bad;
  }
  EXPECT_TRUE(check_markers("no markers").ok);
}

TEST(Markers, RepairDropsEarlierDuplicateOpening) {
  std::vector<std::string> notes;
  const auto fixed = repair_duplicate_openings("You <T1> talked with <T1> lady B </T1>.", notes);
  EXPECT_EQ(fixed, "You talked with <T1> lady B </T1>.");
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_NE(notes[0].find("<T1>"), std::string::npos);
  EXPECT_TRUE(check_markers(fixed).ok);
}

TEST(Markers, Strip) {
  EXPECT_EQ(strip_markers("You washed <T1> the cup </T1> and <T2>the plate</T2> ."),
            "You washed the cup and the plate.");
}

TEST(Lenient, PythonDictVariants) {
  const auto j = parse_lenient_object(
      "Sure:\n{'Question': 'Who did I talk with?', 'Answer': 'It's fine', "
      "'Time span': {'<T1>': [92, 97],},}");
  EXPECT_EQ(j["Question"], "Who did I talk with?");
  EXPECT_EQ(j["Answer"], "It's fine");
  EXPECT_EQ(j["Time span"]["<T1>"], json::parse("[92, 97]"));
  const auto typographic = parse_lenient_object("{\xE2\x80\x98score\xE2\x80\x99: 5, rationale: None}");
  EXPECT_EQ(typographic["score"], 5);
  EXPECT_TRUE(typographic["rationale"].is_null());
  EXPECT_THROW(parse_lenient_object("no object here"), Error);
  EXPECT_THROW(parse_lenient_object("{'a': }"), Error);
}

TEST(Lenient, LooseKeys) {
  const auto j = json::parse(R"({"Time span": 1, "judgement": 0})");
  EXPECT_EQ(*find_key_loose(j, "time_span"), 1);
  EXPECT_EQ(*find_key_loose(j, "Judgement"), 0);
  EXPECT_EQ(find_key_loose(j, "answer"), nullptr);
}

TEST(Triplet, Validation) {
  EXPECT_FALSE(validate_triplet(valid_triplet()));
  auto t = valid_triplet();
  t.answer = "You washed <T1>the cup and <T2>the plate</T2>.";
  EXPECT_EQ(validate_triplet(t)->code, "unbalanced_markers");
  t = valid_triplet();
  t.span_map.erase("<T2>");
  EXPECT_EQ(validate_triplet(t)->code, "marker_key_mismatch");
  t = valid_triplet();
  t.span_map["<T2>"] = {};
  EXPECT_EQ(validate_triplet(t)->code, "empty_span_list");
  t = valid_triplet();
  t.span_map["<T2>"] = {{150, 190}};
  const auto v = validate_triplet(t);
  EXPECT_EQ(v->code, "out_of_range");
  EXPECT_EQ(v->field, "span_map.<T2>[0]");
  t = valid_triplet();
  t.span_map["<T1>"] = {{12, 10}};
  EXPECT_EQ(validate_triplet(t)->code, "reversed_span");
  t = valid_triplet();
  t.question.clear();
  EXPECT_EQ(validate_triplet(t)->code, "missing_field");
  t = valid_triplet();
  t.category = 'Z';
  EXPECT_EQ(validate_triplet(t)->code, "bad_category");
}

TEST(Triplet, JsonRoundTripAndEvidence) {
  auto t = valid_triplet();
  t.category = 'B';
  t.filter = FilterRecord{0, "fine"};
  t.provenance.repairs = {"note"};
  EXPECT_EQ(triplet_from_json(to_json(t)), t);
  EXPECT_EQ(t.evidence().spans(), spans({{10, 12}, {40, 44}, {60, 61}}));
  EXPECT_EQ(span_map_from_json(json::parse(R"({"<T1>": [30, 35]})")).at("<T1>"), spans({{30, 35}}));
  EXPECT_THROW(span_map_from_json(json::parse(R"({"<T1>": [[30]]})")), Error);
}

TEST(RenderPrompt, AttributeTemplatesAndRows) {
  const auto c = candidate(Attribute::kPobj, {{92, "C talks with lady B."},
                                              {96, "C talks with lady B."},
                                              {167, "C talks with lady X."}});
  const auto a = render_prompt(c, "gpt-4o", 0.0, true);
  const auto b = render_prompt(c, "gpt-4o", 0.0, true);
  EXPECT_EQ(a.user, b.user);
  EXPECT_EQ(a.system, std::string(prompts::asset("system")));
  const std::string tail = "start, end, description\n92, 96, C talks with lady B.\n"
                           "96, 167, C talks with lady B.\n167, 180, C talks with lady X.";
  ASSERT_GE(a.user.size(), tail.size());
  EXPECT_EQ(a.user.substr(a.user.size() - tail.size()), tail);
  EXPECT_EQ(template_id_for(Attribute::kPobj), "generate_pobj");
  const auto verb = render_prompt(candidate(Attribute::kVerb, {{1, "C walks"}}), "m", 0.0, true);
  EXPECT_NE(verb.user, a.user);
  const std::string verb_template(prompts::asset("generate_verb"));
  EXPECT_EQ(verb.user.rfind(verb_template.substr(0, verb_template.find("{{")), 0), 0u);
}

TEST(ParseGeneration, StrayOpeningIsRepaired) {
  const std::string raw =
      "{'Question': 'Who did I talk with?', 'Answer': 'You <T1> talked with two ladies including "
      "<T1> lady B </T1> and <T2> lady X </T2>.', 'Time span': {'<T1>': [92, 97], '<T2>': [167, 179]}}";
  const auto out = parse_generation(raw);
  ASSERT_TRUE(out.triplet) << out.violation->message;
  EXPECT_EQ(out.triplet->span_map.size(), 2u);
  EXPECT_EQ(out.triplet->span_map.at("<T1>"), spans({{92, 97}}));
  EXPECT_EQ(out.triplet->question, "Who did I talk with?");
  EXPECT_EQ(out.repairs.size(), 1u);
  EXPECT_TRUE(check_markers(out.triplet->answer).ok);
}

TEST(ParseGeneration, SpanListForm) {
  const auto out = parse_generation(
      R"({"question": "q?", "answer": "You <T1>cut</T1>.", "time span": {"<T1>": [[30, 35], [60, 66]]}})");
  ASSERT_TRUE(out.triplet);
  EXPECT_EQ(out.triplet->span_map.at("<T1>").size(), 2u);
}

TEST(ParseGeneration, BareTokenKeys) {
  const auto out = parse_generation("{'Question': 'q', 'Answer': 'a <T1>b</T1>', 'Time span': {'T1': [1, 2]}}");
  ASSERT_TRUE(out.triplet);
  EXPECT_TRUE(out.triplet->span_map.count("<T1>"));
}

TEST(ParseGeneration, RejectionsCarryReasonCodes) {
  const auto range = parse_generation(
      "{'Question': 'q', 'Answer': 'a <T1>b</T1>', 'Time span': {'<T1>': [150, 190]}}");
  ASSERT_TRUE(range.violation);
  EXPECT_EQ(range.violation->code, "out_of_range");
  const auto unbalanced = parse_generation(
      "{'Question': 'q', 'Answer': 'a <T1>b', 'Time span': {'<T1>': [1, 2]}}");
  EXPECT_EQ(unbalanced.violation->code, "unbalanced_markers");
  const auto mismatch = parse_generation(
      "{'Question': 'q', 'Answer': 'a <T1>b</T1>', 'Time span': {'<T2>': [1, 2]}}");
  EXPECT_EQ(mismatch.violation->code, "marker_key_mismatch");
  const auto garbage = parse_generation("I am unable to comply.");
  EXPECT_FALSE(garbage.triplet);
  EXPECT_EQ(garbage.violation->code, "unparseable");
  const auto missing = parse_generation("{'Question': 'q'}");
  EXPECT_EQ(missing.violation->code, "missing_field");
}

TEST(ParseGeneration, RoundTripThroughSerialization) {
  testkit::ScriptedLlm llm;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::pair<double, std::string>> rows;
    for (int k = 0; k < 3; ++k) rows.push_back({10.0 * k + i, "C opens the box number " + std::to_string(i)});
    const auto raw = llm.complete(render_prompt(candidate(Attribute::kDobj, rows), "m", 0, true));
    const auto out = parse_generation(raw);
    if (!out.triplet) continue;
    const auto reparsed = parse_generation(to_json(*out.triplet).dump());
    ASSERT_TRUE(reparsed.triplet);
    EXPECT_EQ(reparsed.triplet->answer, out.triplet->answer);
    EXPECT_EQ(reparsed.triplet->span_map, out.triplet->span_map);
    EXPECT_EQ(reparsed.triplet->question, out.triplet->question);
  }
}

TEST(FilterVerdict, KeepAndDrop) {
  const auto keep = parse_filter_verdict("{'Judgement': 0, 'Rationale': 'specific'}");
  EXPECT_TRUE(keep.keep);
  EXPECT_EQ(keep.rationale, "specific");
  const auto drop = parse_filter_verdict("{'Judgement': 1, 'Rationale': 'The verb 'open' is too broad.'}");
  EXPECT_FALSE(drop.keep);
  EXPECT_EQ(drop.judgement, 1);
  EXPECT_TRUE(parse_filter_verdict("{\"Judgment\": \"0\"}").keep);
  for (const char* bad : {"{'Judgement': 2}", "keep it", "{'Rationale': 'x'}"}) {
    try {
      parse_filter_verdict(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kFormat);
      EXPECT_EQ(e.details().at("raw"), bad);
    }
  }
}

TEST(FilterRequest, QaSampleWithoutMarkers) {
  EXPECT_EQ(qa_sample(valid_triplet()),
            "{'Q': 'What did I wash?', 'A': 'You washed the cup and the plate.'}");
  auto t = valid_triplet();
  t.question = "What's this?";
  EXPECT_EQ(qa_sample(t).substr(0, 22), "{'Q': \"What's this?\", ");
  Canned c("{'Judgement': 0, 'Rationale': 'ok'}");
  EXPECT_TRUE(llm_filter(valid_triplet(), c, "gpt-4o").keep);
  const std::string tail = "Input: " + qa_sample(valid_triplet());
  EXPECT_EQ(c.last.user.substr(c.last.user.size() - tail.size()), tail);
}

TEST(FilterRequest, ReplayGivesIdenticalDecision) {
  const auto dir = std::filesystem::temp_directory_path() / "mhqa_filter_replay";
  std::filesystem::remove_all(dir);
  RecordingLlmClient rec(std::make_shared<testkit::ScriptedLlm>(), dir);
  const auto first = llm_filter(valid_triplet(), rec, "gpt-4o");
  ReplayLlmClient replay(dir);
  const auto second = llm_filter(valid_triplet(), replay, "gpt-4o");
  EXPECT_EQ(first.keep, second.keep);
  EXPECT_EQ(first.rationale, second.rationale);
}
