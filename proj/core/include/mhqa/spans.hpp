#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mhqa {

/// Closed interval [start, end] in seconds.
struct TimeSpan {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }

  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

class SpanSet;

/// Sorts and merges spans. Two spans are merged when they overlap, touch at a
/// point, or are separated by a gap no larger than merge_epsilon.
SpanSet normalize(std::span<const TimeSpan> raw, double merge_epsilon = 0.0);
SpanSet intersect(const SpanSet& a, const SpanSet& b);

/// Sorted, pairwise-disjoint set of time spans.
///
/// Instances are only produced through normalize() and the set operations,
/// so every SpanSet in circulation satisfies the ordering and disjointness
/// invariants. Zero-length spans are legal and carry zero measure.
class SpanSet {
 public:
  using const_iterator = std::vector<TimeSpan>::const_iterator;

  SpanSet() = default;

  const std::vector<TimeSpan>& spans() const { return spans_; }
  bool empty() const { return spans_.empty(); }
  std::size_t size() const { return spans_.size(); }
  const_iterator begin() const { return spans_.begin(); }
  const_iterator end() const { return spans_.end(); }
  const TimeSpan& operator[](std::size_t i) const { return spans_[i]; }

  friend bool operator==(const SpanSet&, const SpanSet&) = default;

 private:
  explicit SpanSet(std::vector<TimeSpan> spans) : spans_(std::move(spans)) {}

  friend SpanSet normalize(std::span<const TimeSpan> raw, double merge_epsilon);
  friend SpanSet intersect(const SpanSet& a, const SpanSet& b);

  std::vector<TimeSpan> spans_;
};

/// Checks that a span is finite, non-negative and not reversed.
/// Throws a validation error naming the span otherwise.
void validate_span(const TimeSpan& span);

SpanSet normalize(std::initializer_list<TimeSpan> raw, double merge_epsilon = 0.0);

double total_length(const SpanSet& s);

SpanSet unite(const SpanSet& a, const SpanSet& b);

/// Integral values become JSON integers so that [[9,15]] round-trips as text.
nlohmann::json json_number(double value);

/// Shortest decimal text for a number; integral values print without a point.
std::string format_number(double value);

void to_json(nlohmann::json& j, const TimeSpan& span);
void from_json(const nlohmann::json& j, TimeSpan& span);
void to_json(nlohmann::json& j, const SpanSet& set);
void from_json(const nlohmann::json& j, SpanSet& set);

std::string to_string(const SpanSet& set);

}  // namespace mhqa
