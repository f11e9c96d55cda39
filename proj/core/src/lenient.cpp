#include "mhqa/lenient.hpp"

#include <cctype>
#include <charconv>
#include <optional>

#include "mhqa/error.hpp"

namespace mhqa {

using nlohmann::json;

namespace {

// UTF-8 typographic quotes.
constexpr std::string_view kLeftSingle = "\xE2\x80\x98";
constexpr std::string_view kRightSingle = "\xE2\x80\x99";
constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";
constexpr std::string_view kRightDouble = "\xE2\x80\x9D";

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view text, std::size_t pos) : text_(text), pos_(pos) {}

  json parse_value() {
    skip_ws();
    if (at_end()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '{') return parse_object();
    if (c == '[') return parse_array();
    if (auto quote = open_quote()) return parse_string(*quote);
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    const std::string word = parse_word();
    if (word == "true" || word == "True") return true;
    if (word == "false" || word == "False") return false;
    if (word == "null" || word == "None") return nullptr;
    fail("unexpected token '" + word + "'");
  }

  std::size_t pos() const { return pos_; }

 private:
  enum class QuoteStyle { kDouble, kSingle };

  bool at_end() const { return pos_ >= text_.size(); }

  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kFormat, "cannot parse object literal: " + what,
                {{"offset", pos_}});
  }

  std::optional<QuoteStyle> open_quote() {
    if (at_end()) return std::nullopt;
    const char c = text_[pos_];
    if (c == '"') {
      ++pos_;
      return QuoteStyle::kDouble;
    }
    if (c == '\'' || c == '`') {
      ++pos_;
      return QuoteStyle::kSingle;
    }
    if (starts_with(kLeftDouble)) {
      pos_ += kLeftDouble.size();
      return QuoteStyle::kDouble;
    }
    if (starts_with(kLeftSingle) || starts_with(kRightSingle)) {
      pos_ += kLeftSingle.size();
      return QuoteStyle::kSingle;
    }
    return std::nullopt;
  }

  // Length of a closing quote at pos_, or 0.
  std::size_t closing_quote(QuoteStyle style) const {
    if (style == QuoteStyle::kDouble) {
      if (text_[pos_] == '"') return 1;
      if (starts_with(kRightDouble)) return kRightDouble.size();
      return 0;
    }
    if (text_[pos_] == '\'') return 1;
    if (starts_with(kRightSingle)) return kRightSingle.size();
    return 0;
  }

  bool followed_by_delimiter(std::size_t from) const {
    while (from < text_.size() && std::isspace(static_cast<unsigned char>(text_[from]))) ++from;
    if (from >= text_.size()) return true;
    const char c = text_[from];
    return c == ',' || c == ':' || c == '}' || c == ']';
  }

  json parse_string(QuoteStyle style) {
    std::string out;
    while (!at_end()) {
      const char c = text_[pos_];
      if (c == '\\' && pos_ + 1 < text_.size()) {
        const char e = text_[pos_ + 1];
        pos_ += 2;
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case 'u': {
            if (pos_ + 4 > text_.size()) fail("truncated \\u escape");
            unsigned code = 0;
            std::from_chars(text_.data() + pos_, text_.data() + pos_ + 4, code, 16);
            pos_ += 4;
            append_utf8(out, code);
            break;
          }
          default: out.push_back(e);
        }
        continue;
      }
      if (const auto n = closing_quote(style); n > 0) {
        if (style == QuoteStyle::kDouble || followed_by_delimiter(pos_ + n)) {
          pos_ += n;
          return out;
        }
      }
      out.push_back(c);
      ++pos_;
    }
    fail("unterminated string");
  }

  static void append_utf8(std::string& out, unsigned code) {
    if (code < 0x80) {
      out.push_back(static_cast<char>(code));
    } else if (code < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (code >> 6)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (code >> 12)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    }
  }

  json parse_number() {
    const std::size_t start = pos_;
    if (text_[pos_] == '+' || text_[pos_] == '-') ++pos_;
    bool is_float = false;
    while (!at_end()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E' ||
                 ((c == '-' || c == '+') && (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))) {
        is_float = true;
        ++pos_;
      } else {
        break;
      }
    }
    std::string_view token = text_.substr(start, pos_ - start);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (!is_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec == std::errc() && p == token.data() + token.size()) return v;
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), d);
    if (ec != std::errc() || p != token.data() + token.size()) {
      fail("bad number '" + std::string(token) + "'");
    }
    return d;
  }

  std::string parse_word() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '<' || c == '>' ||
          c == '/') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail(std::string("unexpected character '") + text_[pos_] + "'");
    return std::string(text_.substr(start, pos_ - start));
  }

  json parse_array() {
    ++pos_;  // [
    json out = json::array();
    for (;;) {
      skip_ws();
      if (at_end()) fail("unterminated list");
      if (text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      out.push_back(parse_value());
      skip_ws();
      if (at_end()) fail("unterminated list");
      if (text_[pos_] == ',') {
        ++pos_;
      } else if (text_[pos_] != ']') {
        fail("expected ',' or ']'");
      }
    }
  }

  json parse_object() {
    ++pos_;  // {
    json out = json::object();
    for (;;) {
      skip_ws();
      if (at_end()) fail("unterminated object");
      if (text_[pos_] == '}') {
        ++pos_;
        return out;
      }
      std::string key;
      if (auto quote = open_quote()) {
        key = parse_string(*quote).get<std::string>();
      } else {
        key = parse_word();
      }
      skip_ws();
      if (at_end() || text_[pos_] != ':') fail("expected ':' after key '" + key + "'");
      ++pos_;
      out[key] = parse_value();
      skip_ws();
      if (at_end()) fail("unterminated object");
      if (text_[pos_] == ',') {
        ++pos_;
      } else if (text_[pos_] != '}') {
        fail("expected ',' or '}'");
      }
    }
  }

  std::string_view text_;
  std::size_t pos_;
};

std::string loose(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

json parse_lenient_object(std::string_view text) {
  std::optional<Error> first_error;
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    // Strict JSON first; it is the common case with JSON-mode endpoints.
    try {
      std::size_t depth = 0;
      std::size_t end = start;
      bool in_string = false;
      for (; end < text.size(); ++end) {
        const char c = text[end];
        if (in_string) {
          if (c == '\\') ++end;
          else if (c == '"') in_string = false;
        } else if (c == '"') {
          in_string = true;
        } else if (c == '{') {
          ++depth;
        } else if (c == '}' && --depth == 0) {
          break;
        }
      }
      if (end < text.size()) {
        auto parsed = json::parse(text.substr(start, end - start + 1));
        if (parsed.is_object()) return parsed;
      }
    } catch (const json::parse_error&) {
    }
    try {
      LiteralParser parser(text, start);
      json value = parser.parse_value();
      if (value.is_object()) return value;
    } catch (const Error& e) {
      if (!first_error) first_error = e;
    }
  }
  if (first_error) throw *first_error;
  throw Error(ErrorKind::kFormat, "no object literal found in model output");
}

const json* find_key_loose(const json& object, std::string_view key) {
  if (!object.is_object()) return nullptr;
  const std::string wanted = loose(key);
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (loose(it.key()) == wanted) return &it.value();
  }
  return nullptr;
}

}  // namespace mhqa
