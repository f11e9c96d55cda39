#pragma once

#include <map>
#include <string>
#include <string_view>

namespace mhqa::prompts {

/// Version tag of the bundled prompt assets; recorded in triplet provenance.
inline constexpr std::string_view kVersion = "mhqa-prompts/v1";

/// Bundled template text by id: system, generate_verb, generate_dobj,
/// generate_pobj, filter, judge. Throws a validation error for unknown ids.
std::string_view asset(std::string_view id);

/// Substitutes {{name}} placeholders. Every placeholder in the template must be
/// supplied, and every supplied value must be used.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace mhqa::prompts
