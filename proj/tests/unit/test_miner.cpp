#include <gtest/gtest.h>

#include <random>

#include "mhqa/miner.hpp"
#include "mhqa/narrations.hpp"
#include "oracles.hpp"

using namespace mhqa;

namespace {

// n narrations evenly spread so that the first and last start `extent` apart.
Clip clip_with(std::size_t n, double extent) {
  Clip c;
  c.clip_id = "v_000";
  c.video_id = "v";
  c.window = {0, 180};
  for (std::size_t i = 0; i < n; ++i) {
    Narration x;
    x.start = n > 1 ? extent * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    x.text = "C walks";
    c.narrations.push_back(x);
  }
  c.narrations = derive_end_times(c.narrations);
  return c;
}

// A clip whose narrations are given as (start, text); end times are derived.
Clip scripted_clip(std::vector<std::pair<double, std::string>> rows) {
  Clip c;
  c.clip_id = "v_000";
  c.video_id = "v";
  c.window = {0, 180};
  for (auto& [s, t] : rows) {
    Narration n;
    n.start = s;
    n.text = t;
    c.narrations.push_back(n);
  }
  c.narrations = derive_end_times(c.narrations);
  for (std::size_t i = 0; i < c.narrations.size(); ++i) {
    c.narrations[i].narration_id = "v-" + std::to_string(i);
  }
  annotate_clip(c, {}, true);
  return c;
}

const MiningCandidate* find(const std::vector<MiningCandidate>& cs, const std::string& key,
                            Attribute a) {
  for (const auto& c : cs) {
    if (c.node.lemma_key == key && c.node.attribute == a) return &c;
  }
  return nullptr;
}

}  // namespace

TEST(FilterClip, NarrationCountBoundaries) {
  EXPECT_FALSE(filter_clip(clip_with(29, 160)).accept);
  EXPECT_EQ(filter_clip(clip_with(29, 160)).reason, "too_few_narrations");
  EXPECT_TRUE(filter_clip(clip_with(30, 160)).accept);
  EXPECT_TRUE(filter_clip(clip_with(60, 160)).accept);
  EXPECT_FALSE(filter_clip(clip_with(61, 160)).accept);
  EXPECT_EQ(filter_clip(clip_with(61, 160)).reason, "too_many_narrations");
  EXPECT_EQ(filter_clip(clip_with(25, 160)).reason, "too_few_narrations");
}

TEST(FilterClip, ExtentBoundaries) {
  EXPECT_FALSE(filter_clip(clip_with(45, 149)).accept);
  EXPECT_EQ(filter_clip(clip_with(45, 149)).reason, "short_extent");
  EXPECT_TRUE(filter_clip(clip_with(45, 150)).accept);
  EXPECT_TRUE(filter_clip(clip_with(45, 160)).accept);
  EXPECT_FALSE(filter_clip(clip_with(45, 140)).accept);
}

TEST(FilterClip, MatchesBruteForceOverSyntheticVideos) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> count(0, 80);
  std::uniform_real_distribution<double> u(0, 1);
  for (int video = 0; video < 40; ++video) {
    std::vector<Narration> ns;
    for (int k = 0; k < 4; ++k) {
      const int n = count(rng);
      const double spread = 60 + 120 * u(rng);
      for (int i = 0; i < n; ++i) {
        Narration x;
        x.video_id = "v";
        x.start = 180.0 * k + spread * u(rng) * 0.999;
        x.text = "C walks";
        ns.push_back(x);
      }
    }
    std::sort(ns.begin(), ns.end(), [](auto& a, auto& b) { return a.start < b.start; });
    const auto clips = segment_clips("v", 720, ns);
    ASSERT_EQ(clips.size(), 4u);
    for (std::size_t k = 0; k < clips.size(); ++k) {
      std::vector<double> starts;
      for (const auto& x : ns) {
        if (x.start >= 180.0 * k && x.start < 180.0 * (k + 1)) starts.push_back(x.start);
      }
      const double extent = starts.empty() ? 0.0 : starts.back() - starts.front();
      EXPECT_EQ(filter_clip(clips[k]).accept, testkit::oracle_accept_clip(starts.size(), extent))
          << "video " << video << " clip " << k;
    }
  }
}

TEST(Graph, SharedObjectAcrossVerbs) {
  const auto c = scripted_clip({{1, "C opens the fridge"}, {40, "C closes the fridge"},
                                {90, "C opens the fridge"}});
  const auto g = build_graph(c);
  EXPECT_EQ(g.index.at(NodeKey{Attribute::kDobj, "fridge"}).size(), 3u);
  EXPECT_EQ(g.index.at(NodeKey{Attribute::kVerb, "open"}).size(), 2u);
  EXPECT_EQ(g.index.at(NodeKey{Attribute::kVerb, "close"}).size(), 1u);
  for (const auto& o : g.occurrences) {
    EXPECT_EQ(o.span, c.narrations[o.node.narration_index].span());
  }
  Clip empty;
  EXPECT_TRUE(build_graph(empty).occurrences.empty());
}

TEST(Graph, OneOccurrencePerNarration) {
  const auto c = scripted_clip({{1, "C picks up the cup and the other cup"}});
  const auto g = build_graph(c);
  EXPECT_EQ(g.index.at(NodeKey{Attribute::kDobj, "cup"}).size(), 1u);
}

TEST(Candidates, WorkedExample) {
  const auto c = scripted_clip({{12, "C opens the drawer"}, {20, "C walks"},
                                {80, "C opens the drawer"}, {86, "C walks"},
                                {150, "C opens the drawer"}, {158, "C sits"}});
  const auto cs = find_candidates(build_graph(c), c);
  const auto* d = find(cs, "drawer", Attribute::kDobj);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->recurrence_count, 3u);
  EXPECT_DOUBLE_EQ(d->span_extent, 146.0);
  EXPECT_EQ(d->candidate_id, "v_000.dobj.drawer");
  EXPECT_EQ(d->narrations.size(), 3u);
  EXPECT_EQ(find(cs, "walk", Attribute::kVerb), nullptr);  // twice only
}

TEST(Candidates, CountAndExtentBoundaries) {
  for (std::size_t n : {2u, 3u, 4u, 5u}) {
    std::vector<std::pair<double, std::string>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back({30.0 * i, "C opens the box"});
      rows.push_back({30.0 * i + 5, "C sits"});
    }
    const auto c = scripted_clip(rows);
    const bool found = find(find_candidates(build_graph(c), c), "box", Attribute::kDobj);
    EXPECT_EQ(found, n == 3 || n == 4) << n;
  }
  // Three occurrences inside 8 s and exactly 10 s: both excluded; 10.1 s passes.
  for (auto [last_end, expect] : {std::pair{8.0, false}, {10.0, false}, {10.1, true}}) {
    const auto c = scripted_clip({{0, "C opens the box"}, {2, "C opens the box"},
                                  {4, "C opens the box"}, {last_end, "C sits"}});
    EXPECT_EQ(find(find_candidates(build_graph(c), c), "box", Attribute::kDobj) != nullptr, expect)
        << last_end;
  }
}

TEST(Candidates, EveryEmittedCandidateSatisfiesTheRules) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> texts = {"C opens the box", "C opens the door", "C cuts the onion",
                                          "C washes the cup", "C walks", "C talks with lady B",
                                          "C puts the cup on the table"};
  std::uniform_int_distribution<std::size_t> pick(0, texts.size() - 1);
  std::uniform_real_distribution<double> u(0, 179);
  for (int t = 0; t < 60; ++t) {
    std::vector<double> starts(14);
    for (auto& s : starts) s = u(rng);
    std::sort(starts.begin(), starts.end());
    std::vector<std::pair<double, std::string>> rows;
    for (double s : starts) rows.push_back({s, texts[pick(rng)]});
    const auto c = scripted_clip(rows);
    const auto g = build_graph(c);
    const auto cs = find_candidates(g, c);
    std::size_t expected = 0;
    for (const auto& [key, positions] : g.index) {
      double lo = 1e9, hi = -1e9;
      for (auto p : positions) {
        lo = std::min(lo, g.occurrences[p].span.start);
        hi = std::max(hi, g.occurrences[p].span.end);
      }
      const bool ok = testkit::oracle_accept_candidate(positions.size(), hi - lo);
      expected += ok;
      EXPECT_EQ(find(cs, key.lemma_key, key.attribute) != nullptr, ok) << key.lemma_key;
    }
    EXPECT_EQ(cs.size(), expected);
    EXPECT_EQ(cs.size(), find_candidates(g, c).size());
    for (std::size_t i = 1; i < cs.size(); ++i) {
      EXPECT_TRUE(cs[i - 1].node < cs[i].node) << cs[i - 1].candidate_id << " " << cs[i].candidate_id;
    }
  }
}

TEST(Candidates, IdsSlugKeys) {
  EXPECT_EQ(make_candidate_id("v_001", NodeKey{Attribute::kPobj, "counter top"}),
            "v_001.pobj.counter_top");
  EXPECT_EQ(make_candidate_id("v_001", NodeKey{Attribute::kPobj, "lady b"}), "v_001.pobj.lady_b");
}
