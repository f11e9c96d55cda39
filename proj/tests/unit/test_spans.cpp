#include <gtest/gtest.h>

#include <random>

#include "mhqa/error.hpp"
#include "mhqa/spans.hpp"
#include "oracles.hpp"

using namespace mhqa;
using mhqa::testkit::GridCover;
using mhqa::testkit::RawSpans;

namespace {

SpanSet from_raw(const RawSpans& raw) {
  std::vector<TimeSpan> v;
  for (auto [s, e] : raw) v.push_back({s, e});
  return normalize(v);
}

std::vector<TimeSpan> spans(std::initializer_list<TimeSpan> l) { return l; }

}  // namespace

TEST(Normalize, MergesOverlap) {
  EXPECT_EQ(normalize({{5, 10}, {8, 12}}).spans(), spans({{5, 12}}));
}

TEST(Normalize, KeepsDisjoint) {
  EXPECT_EQ(normalize({{0, 1}, {2, 3}}).spans(), spans({{0, 1}, {2, 3}}));
}

TEST(Normalize, MergesWithinEpsilon) {
  EXPECT_EQ(normalize({{0, 1}, {1.05, 2}}, 0.1).spans(), spans({{0, 2}}));
  EXPECT_EQ(normalize({{0, 1}, {1.2, 2}}, 0.1).size(), 2u);
}

TEST(Normalize, TouchingPointMerges) {
  EXPECT_EQ(normalize({{0, 5}, {5, 8}}).spans(), spans({{0, 8}}));
}

TEST(Normalize, SortsInput) {
  EXPECT_EQ(normalize({{20, 25}, {0, 10}}).spans(), spans({{0, 10}, {20, 25}}));
}

TEST(Normalize, ReversedSpanNamesTheSpan) {
  try {
    normalize({{0, 1}, {9, 3}});
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("9"), std::string::npos);
  }
}

TEST(Normalize, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(normalize({{-1, 2}}), Error);
  EXPECT_THROW(normalize({{0, std::numeric_limits<double>::infinity()}}), Error);
  EXPECT_THROW(normalize({{std::nan(""), 1}}), Error);
}

TEST(Normalize, ZeroLengthSpanIsLegal) {
  const auto s = normalize({{4, 4}});
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(total_length(s), 0.0);
}

TEST(TotalLength, Examples) {
  EXPECT_EQ(total_length(SpanSet{}), 0.0);
  EXPECT_EQ(total_length(normalize({{5, 15}})), 10.0);
  EXPECT_EQ(total_length(normalize({{0, 5}, {10, 15}})), 10.0);
}

TEST(SetOps, Examples) {
  EXPECT_EQ(intersect(normalize({{0, 10}}), normalize({{5, 15}})).spans(), spans({{5, 10}}));
  EXPECT_EQ(unite(normalize({{0, 5}, {10, 15}}), normalize({{3, 12}})).spans(), spans({{0, 15}}));
  EXPECT_TRUE(intersect(normalize({{0, 10}}), SpanSet{}).empty());
  EXPECT_TRUE(intersect(SpanSet{}, normalize({{0, 10}})).empty());
}

TEST(SetOps, TouchingSpansIntersectInAPoint) {
  const auto i = intersect(normalize({{0, 5}}), normalize({{5, 9}}));
  EXPECT_EQ(total_length(i), 0.0);
}

TEST(Json, RoundTripsPromptFormat) {
  const auto s = normalize({{9, 15}, {120, 135}});
  const nlohmann::json j = s;
  EXPECT_EQ(j.dump(), "[[9,15],[120,135]]");
  EXPECT_EQ(j.get<SpanSet>(), s);
  EXPECT_EQ(nlohmann::json::parse("[[1.5, 2.25]]").get<SpanSet>().spans(), spans({{1.5, 2.25}}));
}

TEST(Json, RejectsMalformed) {
  EXPECT_THROW(nlohmann::json::parse("[[1]]").get<SpanSet>(), std::exception);
  EXPECT_THROW(nlohmann::json::parse("[[3, 1]]").get<SpanSet>(), std::exception);
  EXPECT_THROW(nlohmann::json::parse("[[\"a\", 1]]").get<SpanSet>(), std::exception);
}

TEST(FormatNumber, ShortestText) {
  EXPECT_EQ(format_number(15), "15");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.5), "2.5");
}

class SpanProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{7};
};

TEST_F(SpanProperties, NormalizeIsIdempotent) {
  std::uniform_real_distribution<double> u(0, 180);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TimeSpan> raw;
    for (int i = 0; i < 6; ++i) {
      double a = u(rng), b = u(rng);
      raw.push_back({std::min(a, b), std::max(a, b)});
    }
    const auto once = normalize(raw, 0.5);
    const auto twice = normalize(once.spans(), 0.5);
    EXPECT_EQ(once, twice);
    for (std::size_t i = 1; i < once.size(); ++i) {
      EXPECT_GT(once[i].start - once[i - 1].end, 0.5);
    }
  }
}

TEST_F(SpanProperties, InclusionExclusion) {
  std::uniform_real_distribution<double> u(0, 180);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TimeSpan> ra, rb;
    for (int i = 0; i < 5; ++i) {
      double a = u(rng), b = u(rng);
      ra.push_back({std::min(a, b), std::max(a, b)});
      a = u(rng), b = u(rng);
      rb.push_back({std::min(a, b), std::max(a, b)});
    }
    const auto a = normalize(ra), b = normalize(rb);
    EXPECT_NEAR(total_length(unite(a, b)) + total_length(intersect(a, b)),
                total_length(a) + total_length(b), 1e-9);
  }
}

TEST_F(SpanProperties, AgreesWithGridOracle) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto ra = testkit::random_grid_spans(rng, 180, 5);
    const auto rb = testkit::random_grid_spans(rng, 180, 5);
    const GridCover ga(ra, 180), gb(rb, 180);
    const auto a = from_raw(ra), b = from_raw(rb);
    EXPECT_NEAR(total_length(intersect(a, b)), GridCover::overlap(ga, gb), GridCover::kCell);
    EXPECT_NEAR(total_length(unite(a, b)), GridCover::either(ga, gb), GridCover::kCell);
  }
}
