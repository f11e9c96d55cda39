#include "mhqa/spans.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "mhqa/error.hpp"

namespace mhqa {

void validate_span(const TimeSpan& span) {
  const auto describe = [&] {
    return "[" + format_number(span.start) + ", " + format_number(span.end) + "]";
  };
  if (!std::isfinite(span.start) || !std::isfinite(span.end)) {
    throw validation_error("non-finite span " + describe(),
                           {{"span", {span.start, span.end}}});
  }
  if (span.start < 0.0 || span.end < 0.0) {
    throw validation_error("negative span " + describe(),
                           {{"span", {span.start, span.end}}});
  }
  if (span.start > span.end) {
    throw validation_error("reversed span " + describe() + " (start > end)",
                           {{"span", {span.start, span.end}}});
  }
}

SpanSet normalize(std::span<const TimeSpan> raw, double merge_epsilon) {
  if (!(merge_epsilon >= 0.0)) {
    throw validation_error("merge_epsilon must be non-negative");
  }
  std::vector<TimeSpan> sorted(raw.begin(), raw.end());
  for (const auto& s : sorted) validate_span(s);
  std::sort(sorted.begin(), sorted.end(), [](const TimeSpan& a, const TimeSpan& b) {
    return a.start < b.start || (a.start == b.start && a.end < b.end);
  });

  std::vector<TimeSpan> merged;
  merged.reserve(sorted.size());
  for (const auto& s : sorted) {
    if (!merged.empty() && s.start <= merged.back().end + merge_epsilon) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return SpanSet(std::move(merged));
}

SpanSet normalize(std::initializer_list<TimeSpan> raw, double merge_epsilon) {
  return normalize(std::span<const TimeSpan>(raw.begin(), raw.size()), merge_epsilon);
}

double total_length(const SpanSet& s) {
  double total = 0.0;
  for (const auto& span : s) total += span.length();
  return total;
}

SpanSet intersect(const SpanSet& a, const SpanSet& b) {
  std::vector<TimeSpan> out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].start, b[j].start);
    const double hi = std::min(a[i].end, b[j].end);
    if (lo <= hi) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  // Closed inputs can yield a shared endpoint twice (e.g. a point touching two
  // spans); renormalizing collapses those.
  return normalize(out);
}

SpanSet unite(const SpanSet& a, const SpanSet& b) {
  std::vector<TimeSpan> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return normalize(all);
}

nlohmann::json json_number(double value) {
  constexpr double kMaxExact = 9007199254740992.0;  // 2^53
  if (std::isfinite(value) && std::trunc(value) == value && std::fabs(value) < kMaxExact) {
    return static_cast<std::int64_t>(value);
  }
  return value;
}

std::string format_number(double value) {
  constexpr double kMaxExact = 9007199254740992.0;
  if (std::isfinite(value) && std::trunc(value) == value && std::fabs(value) < kMaxExact) {
    return std::to_string(static_cast<std::int64_t>(value));
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

void to_json(nlohmann::json& j, const TimeSpan& span) {
  j = nlohmann::json::array({json_number(span.start), json_number(span.end)});
}

void from_json(const nlohmann::json& j, TimeSpan& span) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw validation_error("time span must be a 2-element numeric array, got " + j.dump());
  }
  span.start = j[0].get<double>();
  span.end = j[1].get<double>();
  validate_span(span);
}

void to_json(nlohmann::json& j, const SpanSet& set) {
  j = nlohmann::json::array();
  for (const auto& s : set) j.push_back(s);
}

void from_json(const nlohmann::json& j, SpanSet& set) {
  if (!j.is_array()) {
    throw validation_error("span set must be a JSON array, got " + j.dump());
  }
  std::vector<TimeSpan> raw;
  raw.reserve(j.size());
  for (const auto& item : j) raw.push_back(item.get<TimeSpan>());
  set = normalize(raw);
}

std::string to_string(const SpanSet& set) {
  return nlohmann::json(set).dump();
}

}  // namespace mhqa
