#include "mhqa/markers.hpp"

#include <cctype>
#include <map>
#include <regex>
#include <set>

namespace mhqa {

namespace {

const std::regex& marker_regex() {
  static const std::regex re(R"(<(/?)T(\d*)>)");
  return re;
}

struct Token {
  std::size_t pos;
  std::size_t len;
  bool closing;
  std::string id;  // digits; empty for bare <T>
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker_regex());
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.push_back({static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0)),
                   m[1].length() > 0, m[2].str()});
  }
  return out;
}

}  // namespace

MarkerCheck check_markers(std::string_view answer) {
  MarkerCheck result;
  std::optional<std::string> open;
  std::set<std::string> seen;
  for (const auto& tok : tokenize(answer)) {
    const std::string key = "<T" + tok.id + ">";
    if (tok.id.empty()) {
      result.error = "unnumbered marker at offset " + std::to_string(tok.pos);
      return result;
    }
    if (!tok.closing) {
      if (open) {
        result.error = "marker " + key + " opened while <T" + *open + "> is still open";
        return result;
      }
      if (seen.count(tok.id)) {
        result.error = "marker " + key + " used more than once";
        return result;
      }
      open = tok.id;
      seen.insert(tok.id);
      result.keys.push_back(key);
    } else {
      if (!open || *open != tok.id) {
        result.error = "closing marker </T" + tok.id + "> without matching opening";
        return result;
      }
      open.reset();
    }
  }
  if (open) {
    result.error = "marker <T" + *open + "> is never closed";
    return result;
  }
  result.ok = true;
  return result;
}

std::string repair_duplicate_openings(std::string_view answer, std::vector<std::string>& notes) {
  const auto tokens = tokenize(answer);
  // Index of the pending opening token per id.
  std::map<std::string, std::size_t> pending;
  std::set<std::size_t> drop;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (tok.id.empty()) continue;
    if (!tok.closing) {
      if (auto it = pending.find(tok.id); it != pending.end()) {
        drop.insert(it->second);
        notes.push_back("dropped duplicate opening <T" + tok.id + "> at offset " +
                        std::to_string(tokens[it->second].pos));
        it->second = i;
      } else {
        pending[tok.id] = i;
      }
    } else {
      pending.erase(tok.id);
    }
  }
  if (drop.empty()) return std::string(answer);

  std::string out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!drop.count(i)) continue;
    out.append(answer.substr(pos, tokens[i].pos - pos));
    pos = tokens[i].pos + tokens[i].len;
    // Collapse the double space left behind.
    if (!out.empty() && out.back() == ' ' && pos < answer.size() && answer[pos] == ' ') ++pos;
  }
  out.append(answer.substr(pos));
  return out;
}

std::string strip_markers(std::string_view answer) {
  const std::string s(answer);
  const std::string removed = std::regex_replace(s, marker_regex(), " ");
  std::string out;
  for (char c : removed) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (space) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
      continue;
    }
    if ((c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':') && !out.empty() &&
        out.back() == ' ') {
      out.pop_back();
    }
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace mhqa
