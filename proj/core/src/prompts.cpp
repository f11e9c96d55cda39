#include "mhqa/prompts.hpp"

#include <set>

#include "mhqa/error.hpp"
#include "prompt_assets.hpp"

namespace mhqa::prompts {

std::string_view asset(std::string_view id) {
  for (const auto& entry : detail::kPromptAssets) {
    if (entry.id == id) return entry.text;
  }
  throw validation_error("unknown prompt template '" + std::string(id) + "'");
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::set<std::string> used;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw validation_error("unterminated placeholder in template");
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    const auto it = values.find(name);
    if (it == values.end()) {
      throw validation_error("unresolved placeholder {{" + name + "}}");
    }
    out.append(it->second);
    used.insert(name);
    pos = close + 2;
  }
  for (const auto& [name, value] : values) {
    if (!used.count(name)) {
      throw validation_error("template has no placeholder {{" + name + "}}");
    }
  }
  return out;
}

}  // namespace mhqa::prompts
