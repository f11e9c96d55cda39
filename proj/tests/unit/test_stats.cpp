#include <gtest/gtest.h>

#include "mhqa/stats.hpp"

using namespace mhqa;
using nlohmann::json;

TEST(Stats, WordCountIgnoresMarkers) {
  EXPECT_EQ(word_count("You opened <T1>the fridge</T1> twice."), 5u);
  EXPECT_EQ(word_count("  "), 0u);
  EXPECT_EQ(word_count("<T1> a </T1> <T2>b</T2>"), 2u);
}

TEST(Stats, TwoSamplesTwoSpansEach) {
  StatsSample s{"What did I open?", "You opened <T1>it</T1> and <T2>it</T2>.", normalize({{0, 10}, {20, 25}})};
  const auto st = compute_stats({s, s});
  EXPECT_EQ(st.samples, 2u);
  EXPECT_EQ(st.spans, 4u);
  EXPECT_DOUBLE_EQ(st.mean_duration, 7.5);
  EXPECT_DOUBLE_EQ(st.median_duration, 7.5);
  EXPECT_DOUBLE_EQ(st.mean_hops, 2.0);
  EXPECT_EQ(st.max_hops, 2u);
  EXPECT_DOUBLE_EQ(st.mean_question_words, 4.0);
  EXPECT_DOUBLE_EQ(st.mean_answer_words, 5.0);
  EXPECT_EQ(st.duration_histogram.at(5.0), 2u);
  EXPECT_EQ(st.duration_histogram.at(10.0), 2u);
  EXPECT_EQ(st.hop_histogram.at(2), 2u);
}

TEST(Stats, OverlappingEvidenceCountsAfterNormalization) {
  StatsSample s{"q", "a", normalize({{0, 10}, {5, 12}, {30, 31}})};
  const auto st = compute_stats({s});
  EXPECT_DOUBLE_EQ(st.mean_hops, 2.0);
  EXPECT_DOUBLE_EQ(st.mean_duration, 6.5);
}

TEST(Stats, SampleFromMarkerMapOrPairs) {
  const auto a = stats_sample_from_json(
      json{{"question", "q"}, {"answer", "x"}, {"span_map", {{"<T1>", {{1, 2}}}, {"<T2>", {{5, 9}}}}}});
  EXPECT_EQ(a.evidence, normalize({{1, 2}, {5, 9}}));
  const auto b = stats_sample_from_json(json{{"question", "q"}, {"answer", "x"},
                                             {"Time span", {{5, 9}, {1, 2}}}});
  EXPECT_EQ(b.evidence, a.evidence);
}
