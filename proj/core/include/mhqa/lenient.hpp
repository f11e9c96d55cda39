#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mhqa {

/// Parses the first brace-delimited object literal found in free-form model
/// output. Accepts strict JSON as well as Python-style dict literals: single,
/// back-tick or typographic quotes, bare keys, True/False/None and trailing
/// commas. A single-quoted string only ends at a quote followed by one of
/// `,:}]` so apostrophes inside words survive.
///
/// Throws Error{kFormat} when no object can be recovered.
nlohmann::json parse_lenient_object(std::string_view text);

/// Looks up a key ignoring case, spaces, underscores and hyphens
/// ("Time span" == "time_span" == "TimeSpan"). Returns nullptr when absent.
const nlohmann::json* find_key_loose(const nlohmann::json& object, std::string_view key);

}  // namespace mhqa
