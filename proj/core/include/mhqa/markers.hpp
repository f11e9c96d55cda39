#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mhqa {

/// Result of checking grounding-token markup (<T1> ... </T1>) in an answer.
struct MarkerCheck {
  bool ok = false;
  std::vector<std::string> keys;  // "<T1>", "<T2>", ... in order of first opening
  std::string error;              // reason when !ok
};

/// Strict grammar: every <Tk> is closed by </Tk> exactly once, pairs do not
/// nest or cross, and a marker id is used by one pair only.
MarkerCheck check_markers(std::string_view answer);

/// Removes a duplicated opening marker that appears again before its closing
/// marker (the earlier one is dropped). Returns the repaired text and one note
/// per removal.
std::string repair_duplicate_openings(std::string_view answer, std::vector<std::string>& notes);

/// Plain text with all markers removed and whitespace tidied.
std::string strip_markers(std::string_view answer);

}  // namespace mhqa
