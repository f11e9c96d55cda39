#include "mhqa/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "mhqa/error.hpp"

namespace mhqa {

using nlohmann::json;

namespace {

enum class Kind { kReal, kCount, kBool, kString, kRealList };

struct KeyDef {
  std::string name;
  std::string help;
  Kind kind;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw validation_error("config " + key + ": " + why, {{"field", key}});
}

double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) bad_value(key, "expected a number");
  return v.get<double>();
}

template <typename Acc>
KeyDef real_key(std::string name, std::string help, Acc acc, double lo, double hi,
                bool lo_open = false) {
  KeyDef d{name, std::move(help), Kind::kReal, nullptr, nullptr};
  d.set = [=](RunConfig& c, const json& v) {
    const double x = as_real(name, v);
    if (!(lo_open ? x > lo : x >= lo) || !(x <= hi)) {
      bad_value(name, "value " + v.dump() + " outside " + (lo_open ? "(" : "[") +
                          format_number(lo) + ", " + format_number(hi) + "]");
    }
    acc(c) = x;
  };
  d.get = [=](const RunConfig& c) { return json_number(acc(c)); };
  return d;
}

template <typename Acc>
KeyDef count_key(std::string name, std::string help, Acc acc, std::size_t lo, std::size_t hi) {
  KeyDef d{name, std::move(help), Kind::kCount, nullptr, nullptr};
  d.set = [=](RunConfig& c, const json& v) {
    if (!v.is_number_integer() || v.get<long long>() < 0) bad_value(name, "expected a whole number");
    const auto x = v.get<std::size_t>();
    if (x < lo || x > hi) {
      bad_value(name, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    acc(c) = x;
  };
  d.get = [=](const RunConfig& c) { return json(acc(c)); };
  return d;
}

template <typename Acc>
KeyDef bool_key(std::string name, std::string help, Acc acc) {
  KeyDef d{name, std::move(help), Kind::kBool, nullptr, nullptr};
  d.set = [=](RunConfig& c, const json& v) {
    if (!v.is_boolean()) bad_value(name, "expected true or false");
    acc(c) = v.get<bool>();
  };
  d.get = [=](const RunConfig& c) { return json(acc(c)); };
  return d;
}

template <typename Acc>
KeyDef string_key(std::string name, std::string help, Acc acc,
                  std::vector<std::string> choices = {}) {
  KeyDef d{name, std::move(help), Kind::kString, nullptr, nullptr};
  d.set = [=](RunConfig& c, const json& v) {
    if (!v.is_string()) bad_value(name, "expected a string");
    const auto s = v.get<std::string>();
    if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
      std::string all;
      for (const auto& ch : choices) all += (all.empty() ? "" : "|") + ch;
      bad_value(name, "'" + s + "' is not one of " + all);
    }
    acc(c) = s;
  };
  d.get = [=](const RunConfig& c) { return json(acc(c)); };
  return d;
}

template <typename Acc>
KeyDef list_key(std::string name, std::string help, Acc acc) {
  KeyDef d{name, std::move(help), Kind::kRealList, nullptr, nullptr};
  d.set = [=](RunConfig& c, const json& v) {
    if (!v.is_array() || v.empty()) bad_value(name, "expected a non-empty list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      const double t = as_real(name, x);
      if (!(t >= 0.0 && t < 1.0)) bad_value(name, "thresholds must lie in [0, 1)");
      out.push_back(t);
    }
    acc(c) = out;
  };
  d.get = [=](const RunConfig& c) {
    json a = json::array();
    for (double t : acc(c)) a.push_back(json_number(t));
    return a;
  };
  return d;
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    d.push_back(count_key("filter.min_narrations", "clips with fewer narrations are dropped",
                          [](auto& c) -> auto& { return c.clip.min_narrations; }, 0, 100000));
    d.push_back(count_key("filter.max_narrations", "clips with more narrations are dropped",
                          [](auto& c) -> auto& { return c.clip.max_narrations; }, 0, 100000));
    d.push_back(real_key("filter.min_extent",
                         "seconds required between the first and last narration start",
                         [](auto& c) -> auto& { return c.clip.min_extent; }, 0, 1e6));
    d.push_back(count_key("mine.t_min", "a node must recur more than this many times",
                          [](auto& c) -> auto& { return c.mining.t_min; }, 0, 1000));
    d.push_back(count_key("mine.t_max", "a node must recur fewer than this many times",
                          [](auto& c) -> auto& { return c.mining.t_max; }, 1, 1000));
    d.push_back(real_key("mine.min_extent", "seconds a recurring node must spread over",
                         [](auto& c) -> auto& { return c.mining.min_extent; }, 0, 1e6));
    d.push_back(real_key("proposals.saliency_coef", "fraction of the peak saliency to exceed",
                         [](auto& c) -> auto& { return c.saliency_coef; }, 0, 1, true));
    d.push_back(real_key("proposals.similarity_coef", "fraction of the row peak to exceed",
                         [](auto& c) -> auto& { return c.similarity_coef; }, 0, 1, true));
    d.push_back(real_key("proposals.fps", "frames per second of the score vectors",
                         [](auto& c) -> auto& { return c.frames_per_second; }, 0, 1000, true));
    d.push_back(real_key("proposals.tau", "softmax temperature for similarity rows",
                         [](auto& c) -> auto& { return c.proposal_tau; }, 0, 1000, true));
    d.push_back(real_key("loss.tau", "MIL-NCE temperature",
                         [](auto& c) -> auto& { return c.tau; }, 0, 1000, true));
    d.push_back(real_key("loss.lambda_bce", "weight of the saliency loss",
                         [](auto& c) -> auto& { return c.lambda_bce; }, 0, 1e6));
    d.push_back(real_key("loss.lambda_nce", "weight of the contrastive loss",
                         [](auto& c) -> auto& { return c.lambda_nce; }, 0, 1e6));
    d.push_back(list_key("eval.iou_thresholds", "IoU@t thresholds",
                         [](auto& c) -> auto& { return c.iou_thresholds; }));
    d.push_back(list_key("eval.precision_thresholds", "P@t thresholds",
                         [](auto& c) -> auto& { return c.precision_thresholds; }));
    d.push_back(string_key("llm.mode", "http, replay or record",
                           [](auto& c) -> auto& { return c.llm_mode; },
                           {"http", "replay", "record"}));
    d.push_back(string_key("llm.endpoint", "chat completions URL",
                           [](auto& c) -> auto& { return c.llm_endpoint; }));
    d.push_back(string_key("llm.model", "generation model",
                           [](auto& c) -> auto& { return c.llm_model; }));
    d.push_back(string_key("llm.filter_model", "filtration model",
                           [](auto& c) -> auto& { return c.filter_model; }));
    d.push_back(string_key("llm.judge_model", "QA judge model",
                           [](auto& c) -> auto& { return c.judge_model; }));
    d.push_back(string_key("llm.api_key_env", "environment variable holding the API key",
                           [](auto& c) -> auto& { return c.api_key_env; }));
    d.push_back(string_key("llm.fixtures_dir", "replay/record fixture directory",
                           [](auto& c) -> auto& { return c.fixtures_dir; }));
    d.push_back(real_key("llm.temperature", "sampling temperature",
                         [](auto& c) -> auto& { return c.temperature; }, 0, 2));
    d.push_back(bool_key("llm.json_mode", "ask the endpoint for a JSON object",
                         [](auto& c) -> auto& { return c.json_mode; }));
    d.push_back(count_key("llm.parallelism", "concurrent requests",
                          [](auto& c) -> auto& { return c.parallelism; }, 1, 64));
    d.push_back(count_key("llm.max_retries", "retries after a transport failure",
                          [](auto& c) -> auto& { return c.max_retries; }, 0, 10));
    d.push_back(count_key("llm.min_interval_ms", "minimum gap between requests",
                          [](auto& c) -> auto& { return c.min_interval_ms; }, 0, 600000));
    d.push_back(count_key("llm.timeout_s", "request timeout in seconds",
                          [](auto& c) -> auto& { return c.timeout_s; }, 1, 3600));
    d.push_back(string_key("embed.mode", "http or replay",
                           [](auto& c) -> auto& { return c.embed_mode; }, {"http", "replay"}));
    d.push_back(string_key("embed.endpoint", "embeddings URL",
                           [](auto& c) -> auto& { return c.embed_endpoint; }));
    d.push_back(string_key("embed.model", "embedding model",
                           [](auto& c) -> auto& { return c.embed_model; }));
    d.push_back(string_key("embed.fixtures_dir", "embedding fixture directory",
                           [](auto& c) -> auto& { return c.embed_fixtures_dir; }));
    d.push_back(bool_key("narrations.allow_heuristic", "parse narrations without a sidecar",
                         [](auto& c) -> auto& { return c.allow_heuristic; }));
    d.push_back(string_key("store.path", "store directory",
                           [](auto& c) -> auto& { return c.store_path; }));
    d.push_back(string_key("service.host", "bind address",
                           [](auto& c) -> auto& { return c.host; }));
    d.push_back(count_key("service.port", "bind port",
                          [](auto& c) -> auto& { return c.port; }, 1, 65535));
    d.push_back(string_key("service.token_env", "environment variable holding the bearer token",
                           [](auto& c) -> auto& { return c.token_env; }));
    d.push_back(string_key("service.static_dir", "directory of review UI assets",
                           [](auto& c) -> auto& { return c.static_dir; }));
    return d;
  }();
  return defs;
}

const KeyDef& find_key(const std::string& key) {
  for (const auto& d : registry()) {
    if (d.name == key) return d;
  }
  throw validation_error("unknown config key '" + key + "'", {{"field", key}});
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

json parse_number_text(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long i = 0;
  auto [pi, ei] = std::from_chars(t.data(), t.data() + t.size(), i);
  if (ei == std::errc() && pi == t.data() + t.size() && !t.empty()) return i;
  double d = 0.0;
  auto [pd, ed] = std::from_chars(t.data(), t.data() + t.size(), d);
  if (ed == std::errc() && pd == t.data() + t.size() && !t.empty()) return d;
  bad_value(key, "'" + t + "' is not a number");
}

json text_to_json(const KeyDef& def, const std::string& raw) {
  std::string text = trim(raw);
  switch (def.kind) {
    case Kind::kReal:
    case Kind::kCount:
      return parse_number_text(def.name, text);
    case Kind::kBool:
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      bad_value(def.name, "'" + text + "' is not a boolean");
    case Kind::kString:
      if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
          text.back() == text.front()) {
        text = text.substr(1, text.size() - 2);
      }
      return text;
    case Kind::kRealList: {
      if (!text.empty() && text.front() == '[' && text.back() == ']') {
        text = text.substr(1, text.size() - 2);
      }
      json out = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(parse_number_text(def.name, item));
      return out;
    }
  }
  return text;
}

std::string env_name(const std::string& key) {
  std::string out = "MHQA_";
  for (char c : key) out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(c)));
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& def = find_key(key);
  def.set(*this, text_to_json(def, value));
}

void RunConfig::set_json(const std::string& key, const json& value) {
  find_key(key).set(*this, value);
}

void RunConfig::apply_env() {
  for (const auto& def : registry()) {
    if (const char* v = std::getenv(env_name(def.name).c_str())) def.set(*this, text_to_json(def, v));
  }
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::stringstream in(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw validation_error(origin + ":" + std::to_string(number) + ": bad section header",
                               {{"line", number}});
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw validation_error(origin + ":" + std::to_string(number) + ": expected key = value",
                             {{"line", number}});
    }
    std::string key = trim(t.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    std::string value = t.substr(eq + 1);
    // Trailing comments are allowed after unquoted values.
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = value.substr(0, hash);
    set(key, value);
  }
}

void RunConfig::apply_json(const json& j) {
  if (!j.is_object()) throw validation_error("config JSON must be an object");
  for (auto sec = j.begin(); sec != j.end(); ++sec) {
    if (sec.key() == "schema_version") {
      if (sec.value() != kConfigSchemaVersion) {
        throw validation_error("unsupported config schema_version", {{"field", "schema_version"}});
      }
      continue;
    }
    if (!sec.value().is_object()) {
      throw validation_error("config section " + sec.key() + " must be an object",
                             {{"field", sec.key()}});
    }
    for (auto it = sec.value().begin(); it != sec.value().end(); ++it) {
      set_json(sec.key() + "." + it.key(), it.value());
    }
  }
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    try {
      apply_json(json::parse(ss.str()));
    } catch (const json::parse_error& e) {
      throw validation_error("config " + path + ": " + e.what());
    }
  } else {
    apply_text(ss.str(), path);
  }
}

void RunConfig::apply_overrides(const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw validation_error("override '" + a + "' lacks '='");
    set(trim(a.substr(0, eq)), a.substr(eq + 1));
  }
}

void RunConfig::validate() const {
  if (!(mining.t_min < mining.t_max)) {
    throw validation_error("mine.t_min must be below mine.t_max", {{"field", "mine.t_min"}});
  }
  if (clip.min_narrations > clip.max_narrations) {
    throw validation_error("filter.min_narrations exceeds filter.max_narrations",
                           {{"field", "filter.min_narrations"}});
  }
}

json RunConfig::to_json() const {
  json j{{"schema_version", kConfigSchemaVersion}};
  for (const auto& def : registry()) {
    const auto dot = def.name.find('.');
    j[def.name.substr(0, dot)][def.name.substr(dot + 1)] = def.get(*this);
  }
  return j;
}

std::string RunConfig::default_text() {
  const RunConfig defaults;
  std::string out = "# mhqa run configuration (schema_version " +
                    std::to_string(kConfigSchemaVersion) + ")\n";
  std::string section;
  for (const auto& def : registry()) {
    const auto dot = def.name.find('.');
    const auto sec = def.name.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    json v = def.get(defaults);
    std::string text;
    if (v.is_string()) {
      text = v.get<std::string>();
    } else if (v.is_array()) {
      for (const auto& x : v) text += (text.empty() ? "" : ", ") + x.dump();
    } else {
      text = v.dump();
    }
    out += "# " + def.help + "\n" + def.name.substr(dot + 1) + " = " + text + "\n";
  }
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& def : registry()) out.push_back(def.name);
  return out;
}

RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides,
                      bool use_env) {
  RunConfig c;
  if (use_env) c.apply_env();
  if (!file.empty()) c.apply_file(file);
  c.apply_overrides(overrides);
  c.validate();
  return c;
}

}  // namespace mhqa
