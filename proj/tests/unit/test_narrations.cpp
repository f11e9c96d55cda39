#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "mhqa/error.hpp"
#include "mhqa/narrations.hpp"

using namespace mhqa;

namespace {

Narration N(double start, std::string text = "C walks", std::string video = "v") {
  Narration n;
  n.video_id = std::move(video);
  n.start = start;
  n.text = std::move(text);
  return n;
}

std::vector<std::string> keys(const std::vector<ActionNode>& nodes, Attribute a) {
  std::vector<std::string> out;
  for (const auto& n : nodes) {
    if (n.attribute == a) out.push_back(n.lemma_key);
  }
  return out;
}

using V = std::vector<std::string>;

std::map<std::string, std::vector<TokenAnnotation>> sidecar() {
  std::ifstream in(std::string(MHQA_TEST_DATA_DIR) + "/corpus/sidecar.conllu");
  return read_conllu(in);
}

}  // namespace

TEST(EndTimes, NextStartAndClamp) {
  const auto out = derive_end_times({N(10), N(25), N(40)});
  EXPECT_EQ(out[0].end, 25);
  EXPECT_EQ(out[1].end, 40);
  EXPECT_EQ(out[2].end, 180);
  EXPECT_EQ(derive_end_times({N(10)})[0].end, 180);
  const auto same = derive_end_times({N(10), N(10)});
  EXPECT_EQ(same[0].end, 10);
  EXPECT_THROW(derive_end_times({N(20), N(10)}), Error);
}

TEST(EndTimes, OrderPreservedAndEndNotBeforeStart) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 180);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> starts(20);
    for (auto& s : starts) s = u(rng);
    std::sort(starts.begin(), starts.end());
    std::vector<Narration> ns;
    for (double s : starts) ns.push_back(N(s));
    const auto out = derive_end_times(ns);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out[i].start, starts[i]);
      EXPECT_GE(out[i].end, out[i].start);
    }
  }
}

TEST(Segment, ClipCountsAndRemainder) {
  EXPECT_EQ(segment_clips("v", 1440, {}).size(), 8u);
  EXPECT_EQ(segment_clips("v", 450, {}).size(), 2u);
  EXPECT_EQ(segment_clips("v", 179.9, {}).size(), 0u);
  EXPECT_EQ(segment_clips("v", 180, {}).size(), 1u);
}

TEST(Segment, RebasesIntoClipTime) {
  const auto clips = segment_clips("v", 450, {N(3), N(185), N(200), N(400)});
  ASSERT_EQ(clips.size(), 2u);
  EXPECT_EQ(clips[0].clip_id, "v_000");
  EXPECT_EQ(clips[1].clip_id, "v_001");
  ASSERT_EQ(clips[1].narrations.size(), 2u);
  EXPECT_EQ(clips[1].narrations[0].start, 5);
  EXPECT_EQ(clips[1].narrations[0].end, 20);
  EXPECT_EQ(clips[1].narrations[1].end, 180);
  EXPECT_EQ(clips[1].window.start, 180);
  EXPECT_EQ(clips[1].window.end, 360);
}

TEST(Segment, WindowsDisjointAndNarrationsInside) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<Narration> ns;
  for (int i = 0; i < 300; ++i) ns.push_back(N(u(rng)));
  std::sort(ns.begin(), ns.end(), [](auto& a, auto& b) { return a.start < b.start; });
  const auto clips = segment_clips("v", 1000, ns);
  ASSERT_EQ(clips.size(), 5u);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    EXPECT_EQ(clips[i].window.end - clips[i].window.start, 180.0);
    if (i) EXPECT_GE(clips[i].window.start, clips[i - 1].window.end);
    for (const auto& n : clips[i].narrations) {
      EXPECT_GE(n.start, 0.0);
      EXPECT_LT(n.start, 180.0);
      EXPECT_LE(n.end, 180.0);
    }
  }
}

TEST(Readers, CsvWithHeaderQuotesAndDuration) {
  std::istringstream in(
      "video_id,start,text,narration_id,duration\n"
      "v1,12.5,\"C picks up the cup, then the lid\",,360\n"
      "v1,3,C walks,n0,360\n");
  auto c = read_narrations_csv(in);
  ASSERT_EQ(c.narrations.size(), 2u);
  EXPECT_EQ(c.narrations[0].text, "C picks up the cup, then the lid");
  EXPECT_EQ(c.durations.at("v1"), 360);
  canonicalize(c);
  EXPECT_EQ(c.narrations[0].narration_id, "n0");
  EXPECT_EQ(c.narrations[1].narration_id, "v1-0001");
}

TEST(Readers, CsvWithoutHeaderAndBadRows) {
  std::istringstream in("v1,1,C opens the door\n");
  EXPECT_EQ(read_narrations_csv(in).narrations.size(), 1u);
  std::istringstream bad("video_id,start,text\nv1,abc,C walks\n");
  EXPECT_THROW(read_narrations_csv(bad), Error);
}

TEST(Readers, Jsonl) {
  std::istringstream in(
      "{\"video_id\": \"a\", \"start\": 4, \"text\": \"C walks\"}\n\n"
      "{\"video_id\": \"a\", \"start\": 1, \"text\": \"C sits\", \"duration\": 200}\n");
  auto c = read_narrations_jsonl(in);
  EXPECT_EQ(c.narrations.size(), 2u);
  EXPECT_EQ(c.durations.at("a"), 200);
  std::istringstream bad("{\"video_id\": \"a\"}\n");
  EXPECT_THROW(read_narrations_jsonl(bad), Error);
}

TEST(Readers, CanonicalizeIsStableAndRejectsDuplicateIds) {
  Corpus c;
  c.narrations = {N(5, "C b", "y"), N(5, "C a", "x"), N(1, "C c", "x"), N(5, "C d", "x")};
  canonicalize(c);
  EXPECT_EQ(c.narrations[0].text, "C c");
  EXPECT_EQ(c.narrations[1].text, "C a");
  EXPECT_EQ(c.narrations[2].text, "C d");
  EXPECT_EQ(c.narrations[3].video_id, "y");
  Corpus dup;
  dup.narrations = {N(1), N(2)};
  dup.narrations[0].narration_id = dup.narrations[1].narration_id = "same";
  EXPECT_THROW(canonicalize(dup), Error);
}

TEST(Conllu, ReadsSidecarAndRoundTrips) {
  const auto sc = sidecar();
  ASSERT_EQ(sc.size(), 3u);
  const auto& toks = sc.at("v9-0001");
  ASSERT_EQ(toks.size(), 9u);
  EXPECT_EQ(toks[4].lemma, "pot");
  EXPECT_EQ(toks[4].deprel, "obj");
  EXPECT_EQ(toks[4].head, 2);
  std::istringstream again(write_conllu("v9-0001", "C puts the cooking pot on the counter top", toks));
  EXPECT_EQ(read_conllu(again).at("v9-0001"), toks);
}

TEST(Conllu, MalformedLineReportsLine) {
  std::istringstream in("# sent_id = a\n1\tC\tC\n");
  try {
    read_conllu(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_EQ(e.details().at("line"), 2);
  }
}

TEST(ExtractNodes, UniversalDependenciesSidecar) {
  const auto sc = sidecar();
  const auto a = extract_nodes(sc.at("v9-0001"));
  EXPECT_EQ(keys(a, Attribute::kVerb), V{"put"});
  EXPECT_EQ(keys(a, Attribute::kDobj), V{"cooking pot"});
  EXPECT_EQ(keys(a, Attribute::kPobj), V{"counter top"});

  const auto b = extract_nodes(sc.at("v9-0002"));
  EXPECT_EQ(keys(b, Attribute::kVerb), (V{"pick", "wash"}));
  EXPECT_EQ(keys(b, Attribute::kDobj), V{"knife"});  // pronoun object dropped
  for (const auto& n : b) {
    if (n.lemma_key == "pick") EXPECT_EQ(n.surface, "picks up");
  }
  EXPECT_TRUE(extract_nodes(sc.at("v9-0003")).empty());
}

TEST(ExtractNodes, HeuristicMatchesTheSidecarParse) {
  const auto sc = sidecar();
  const auto text = "C puts the cooking pot on the counter top";
  EXPECT_EQ(keys(extract_nodes(heuristic_parse(text)), Attribute::kDobj),
            keys(extract_nodes(sc.at("v9-0001")), Attribute::kDobj));
  EXPECT_EQ(keys(extract_nodes(heuristic_parse(text)), Attribute::kPobj),
            keys(extract_nodes(sc.at("v9-0001")), Attribute::kPobj));
}

TEST(ExtractNodes, TalksWithLadyB) {
  const auto nodes = extract_nodes(heuristic_parse("C talks with lady B."));
  EXPECT_EQ(keys(nodes, Attribute::kVerb), V{"talk"});
  EXPECT_EQ(keys(nodes, Attribute::kPobj), V{"lady b"});
  EXPECT_TRUE(keys(nodes, Attribute::kDobj).empty());
  for (const auto& n : nodes) {
    if (n.attribute == Attribute::kPobj) EXPECT_EQ(n.surface, "lady B");
  }
}

TEST(Heuristic, SimpleClauses) {
  const auto open = extract_nodes(heuristic_parse("C opens the fridge"));
  EXPECT_EQ(keys(open, Attribute::kVerb), V{"open"});
  EXPECT_EQ(keys(open, Attribute::kDobj), V{"fridge"});
  const auto walk = extract_nodes(heuristic_parse("C walks"));
  EXPECT_EQ(walk.size(), 1u);
  EXPECT_EQ(keys(walk, Attribute::kVerb), V{"walk"});
  EXPECT_TRUE(heuristic_parse("The man opens the fridge").empty());
  EXPECT_TRUE(extract_nodes(heuristic_parse("Silence.")).empty());
}

TEST(Heuristic, PrefixedTagAndPlural) {
  const auto nodes = extract_nodes(heuristic_parse("#C C washes the cups in the sink"));
  EXPECT_EQ(keys(nodes, Attribute::kVerb), V{"wash"});
  EXPECT_EQ(keys(nodes, Attribute::kDobj), V{"cup"});
  EXPECT_EQ(keys(nodes, Attribute::kPobj), V{"sink"});
}

TEST(Heuristic, DeterministicAndCaseNormalized) {
  const auto a = extract_nodes(heuristic_parse("C Opens the FRIDGE"));
  const auto b = extract_nodes(heuristic_parse("C Opens the FRIDGE"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(keys(a, Attribute::kDobj), V{"fridge"});
}

TEST(Lemmas, CommonForms) {
  EXPECT_EQ(lemmatize_verb("washes"), "wash");
  EXPECT_EQ(lemmatize_verb("picks"), "pick");
  EXPECT_EQ(lemmatize_verb("carries"), "carry");
  EXPECT_EQ(lemmatize_noun("cups"), "cup");
  EXPECT_EQ(lemmatize_noun("knives"), "knife");
  EXPECT_EQ(lemmatize_noun("glass"), "glass");
}

TEST(Annotate, SidecarFirstThenHeuristic) {
  auto clips = segment_clips("v9", 180, {N(1, "C puts the cooking pot on the counter top", "v9"),
                                         N(5, "C opens the fridge", "v9")});
  clips[0].narrations[0].narration_id = "v9-0001";
  clips[0].narrations[1].narration_id = "v9-0099";
  annotate_clip(clips[0], sidecar(), true);
  EXPECT_FALSE(clips[0].narrations[0].heuristic);
  EXPECT_TRUE(clips[0].narrations[1].heuristic);
  EXPECT_EQ(clips[0].narrations[1].nodes.size(), 2u);
  EXPECT_EQ(clips[0].narrations[1].nodes[0].narration_index, 1u);

  auto strict = segment_clips("v9", 180, {N(5, "C opens the fridge", "v9")});
  strict[0].narrations[0].narration_id = "v9-0099";
  EXPECT_THROW(annotate_clip(strict[0], sidecar(), false), Error);
}

TEST(Json, ClipRoundTrip) {
  auto clips = segment_clips("v", 180, {N(1, "C opens the fridge")});
  clips[0].narrations[0].narration_id = "v-0000";
  annotate_clip(clips[0], {}, true);
  const nlohmann::json j = clips[0];
  const auto back = j.get<Clip>();
  EXPECT_EQ(back.clip_id, clips[0].clip_id);
  EXPECT_EQ(back.narrations[0].nodes, clips[0].narrations[0].nodes);
  EXPECT_EQ(nlohmann::json(back), j);
}
