#include "mhqa/narrations.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mhqa/error.hpp"

namespace mhqa {

using nlohmann::json;

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::kVerb: return "verb";
    case Attribute::kDobj: return "dobj";
    case Attribute::kPobj: return "pobj";
  }
  return "verb";
}

Attribute attribute_from_string(std::string_view s) {
  if (s == "verb") return Attribute::kVerb;
  if (s == "dobj") return Attribute::kDobj;
  if (s == "pobj") return Attribute::kPobj;
  throw validation_error("unknown node attribute '" + std::string(s) + "'", {{"field", "attribute"}});
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::optional<double> parse_double(std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

}  // namespace

std::vector<Narration> derive_end_times(std::vector<Narration> narrations, double clip_end) {
  for (std::size_t i = 1; i < narrations.size(); ++i) {
    if (narrations[i].start < narrations[i - 1].start) {
      throw validation_error("narrations are not sorted by start at index " + std::to_string(i),
                             {{"index", i}});
    }
  }
  for (std::size_t i = 0; i < narrations.size(); ++i) {
    narrations[i].end =
        i + 1 < narrations.size() ? narrations[i + 1].start : std::max(clip_end, narrations[i].start);
  }
  return narrations;
}

std::string make_clip_id(const std::string& video_id, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", index);
  return video_id + "_" + buf;
}

std::vector<Clip> segment_clips(const std::string& video_id, double duration,
                                const std::vector<Narration>& narrations) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw validation_error("video duration must be positive", {{"video_id", video_id}});
  }
  const auto count = static_cast<std::size_t>(std::floor(duration / kClipSeconds + 1e-9));
  std::vector<Clip> clips(count);
  for (std::size_t k = 0; k < count; ++k) {
    clips[k].clip_id = make_clip_id(video_id, k);
    clips[k].video_id = video_id;
    clips[k].window = {static_cast<double>(k) * kClipSeconds,
                       static_cast<double>(k + 1) * kClipSeconds};
  }
  for (const auto& n : narrations) {
    if (n.video_id != video_id) {
      throw validation_error("narration " + n.narration_id + " belongs to video " + n.video_id,
                             {{"video_id", video_id}});
    }
    if (n.start < 0.0) continue;
    const auto k = static_cast<std::size_t>(std::floor(n.start / kClipSeconds));
    if (k >= count) continue;
    Narration local = n;
    local.start = n.start - clips[k].window.start;
    clips[k].narrations.push_back(std::move(local));
  }
  for (auto& clip : clips) clip.narrations = derive_end_times(std::move(clip.narrations));
  return clips;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw validation_error("unterminated quoted field in CSV");
  if (any && (!field.empty() || !row.empty())) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

void add_narration(Corpus& corpus, std::size_t line, const std::string& video_id,
                   std::optional<double> start, const std::string& text,
                   const std::string& narration_id, std::optional<double> duration) {
  const json where{{"line", line}};
  if (video_id.empty()) throw validation_error("line " + std::to_string(line) + ": empty video_id", where);
  if (!start || !std::isfinite(*start) || *start < 0.0) {
    throw validation_error("line " + std::to_string(line) + ": start must be a non-negative number",
                           where);
  }
  if (trim(text).empty()) throw validation_error("line " + std::to_string(line) + ": empty text", where);
  if (duration) {
    auto [it, inserted] = corpus.durations.emplace(video_id, *duration);
    if (!inserted && it->second != *duration) {
      throw validation_error("line " + std::to_string(line) + ": conflicting duration for video " +
                                 video_id,
                             where);
    }
  }
  Narration n;
  n.narration_id = narration_id;
  n.video_id = video_id;
  n.start = *start;
  n.end = *start;
  n.text = trim(text);
  corpus.narrations.push_back(std::move(n));
}

}  // namespace

Corpus read_narrations_csv(std::istream& in) {
  const auto rows = parse_csv(in);
  Corpus corpus;
  std::map<std::string, std::size_t> cols{{"video_id", 0}, {"start", 1}, {"text", 2}};
  std::size_t first = 0;
  if (!rows.empty()) {
    const auto& head = rows[0];
    const bool header = std::any_of(head.begin(), head.end(),
                                    [](const std::string& f) { return lower(trim(f)) == "video_id"; });
    if (header) {
      cols.clear();
      for (std::size_t i = 0; i < head.size(); ++i) cols[lower(trim(head[i]))] = i;
      for (const char* required : {"video_id", "start", "text"}) {
        if (!cols.count(required)) {
          throw validation_error(std::string("CSV header lacks column ") + required);
        }
      }
      first = 1;
    } else {
      cols["narration_id"] = 3;
      cols["duration"] = 4;
    }
  }
  const auto field = [&](const std::vector<std::string>& row, const std::string& name) {
    const auto it = cols.find(name);
    if (it == cols.end() || it->second >= row.size()) return std::string();
    return row[it->second];
  };
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    const std::string dur = trim(field(row, "duration"));
    std::optional<double> duration;
    if (!dur.empty()) {
      duration = parse_double(dur);
      if (!duration) throw validation_error("line " + std::to_string(r + 1) + ": bad duration");
    }
    add_narration(corpus, r + 1, trim(field(row, "video_id")), parse_double(field(row, "start")),
                  field(row, "text"), trim(field(row, "narration_id")), duration);
  }
  return corpus;
}

Corpus read_narrations_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw validation_error("line " + std::to_string(number) + ": " + e.what(), {{"line", number}});
    }
    if (!j.is_object()) throw validation_error("line " + std::to_string(number) + ": not an object");
    std::optional<double> start;
    if (j.contains("start") && j["start"].is_number()) start = j["start"].get<double>();
    std::optional<double> duration;
    if (j.contains("duration") && j["duration"].is_number()) duration = j["duration"].get<double>();
    add_narration(corpus, number, j.value("video_id", std::string()), start,
                  j.value("text", std::string()), j.value("narration_id", std::string()), duration);
  }
  return corpus;
}

Corpus read_narrations_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path);
  if (ends_with(lower(path), ".csv")) return read_narrations_csv(in);
  return read_narrations_jsonl(in);
}

void canonicalize(Corpus& corpus) {
  std::stable_sort(corpus.narrations.begin(), corpus.narrations.end(),
                   [](const Narration& a, const Narration& b) {
                     if (a.video_id != b.video_id) return a.video_id < b.video_id;
                     return a.start < b.start;
                   });
  std::map<std::string, std::size_t> counter;
  std::set<std::string> seen;
  for (auto& n : corpus.narrations) {
    const std::size_t k = counter[n.video_id]++;
    if (n.narration_id.empty()) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04zu", k);
      n.narration_id = n.video_id + "-" + buf;
    }
    if (!seen.insert(n.narration_id).second) {
      throw validation_error("duplicate narration id " + n.narration_id,
                             {{"field", "narration_id"}});
    }
  }
}

std::map<std::string, std::vector<TokenAnnotation>> read_conllu(std::istream& in) {
  std::map<std::string, std::vector<TokenAnnotation>> out;
  std::string line;
  std::size_t number = 0;
  std::string sent_id;
  std::vector<TokenAnnotation> tokens;
  std::size_t sentence_line = 0;

  const auto flush = [&] {
    if (tokens.empty() && sent_id.empty()) return;
    if (sent_id.empty()) {
      throw Error(ErrorKind::kFormat,
                  "CoNLL-U sentence at line " + std::to_string(sentence_line) + " has no sent_id",
                  {{"line", sentence_line}});
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].head < 0 || static_cast<std::size_t>(tokens[i].head) > tokens.size()) {
        throw Error(ErrorKind::kFormat,
                    "CoNLL-U sentence " + sent_id + " token " + std::to_string(i + 1) +
                        " has head outside the sentence",
                    {{"sent_id", sent_id}});
      }
    }
    if (!out.emplace(sent_id, std::move(tokens)).second) {
      throw Error(ErrorKind::kFormat, "duplicate CoNLL-U sent_id " + sent_id);
    }
    tokens.clear();
    sent_id.clear();
  };

  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (tokens.empty() && sent_id.empty()) sentence_line = number;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos && trim(line.substr(1, eq - 1)) == "sent_id") {
        sent_id = trim(line.substr(eq + 1));
      }
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 10) {
      throw Error(ErrorKind::kFormat,
                  "CoNLL-U line " + std::to_string(number) + " has " + std::to_string(cols.size()) +
                      " columns, expected 10",
                  {{"line", number}});
    }
    // Multiword ranges and empty nodes carry no dependency edge.
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    TokenAnnotation t;
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    const auto& head = cols[6];
    auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), t.head);
    if (ec != std::errc() || p != head.data() + head.size()) {
      throw Error(ErrorKind::kFormat, "CoNLL-U line " + std::to_string(number) + " has bad HEAD",
                  {{"line", number}});
    }
    t.deprel = cols[7];
    if (t.deprel.empty() || t.deprel == "_") {
      throw Error(ErrorKind::kFormat, "CoNLL-U line " + std::to_string(number) + " has no DEPREL",
                  {{"line", number}});
    }
    tokens.push_back(std::move(t));
  }
  flush();
  return out;
}

std::string write_conllu(const std::string& sent_id, const std::string& text,
                         const std::vector<TokenAnnotation>& tokens) {
  std::ostringstream out;
  out << "# sent_id = " << sent_id << "\n# text = " << text << "\n";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    out << (i + 1) << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << "\t_\t_\t" << t.head
        << '\t' << t.deprel << "\t_\t_\n";
  }
  out << "\n";
  return out.str();
}

namespace {

const std::unordered_set<std::string> kDeterminers = {
    "the", "a", "an", "this", "that", "these", "those", "some", "another", "each", "every",
    "both", "all", "any", "its", "their", "his", "my", "your", "our"};
const std::unordered_set<std::string> kPronouns = {
    "it", "them", "him", "her", "me", "us", "you", "himself", "herself", "itself", "themselves",
    "something", "someone", "everything", "anything"};
const std::unordered_set<std::string> kPrepositions = {
    "on", "in", "into", "onto", "from", "to", "with", "at", "by", "for", "of", "under", "over",
    "above", "below", "behind", "beside", "between", "inside", "outside", "near", "through",
    "across", "along", "around", "towards", "toward", "against", "about", "within", "beneath",
    "underneath", "upon", "past"};
const std::unordered_set<std::string> kParticles = {"up", "down", "out", "off", "away", "back"};
const std::unordered_set<std::string> kAdjectives = {
    "small", "big", "large", "little", "long", "short", "red", "blue", "green", "white", "black",
    "yellow", "brown", "orange", "pink", "purple", "grey", "gray", "wooden", "metal", "plastic",
    "empty", "full", "dirty", "clean", "wet", "dry", "hot", "cold", "warm", "left", "right",
    "other", "new", "old", "sharp", "round", "flat", "heavy", "tiny", "same", "next", "last",
    "first", "second", "third", "whole", "half", "raw", "fresh", "soft", "hard", "thick", "thin"};
const std::unordered_set<std::string> kVerbs = {
    "walk", "talk", "open", "close", "pick", "put", "place", "take", "hold", "cut", "wash",
    "look", "turn", "move", "drop", "touch", "adjust", "remove", "stir", "pour", "clean",
    "wipe", "fold", "throw", "carry", "push", "pull", "lift", "read", "write", "play", "eat",
    "drink", "sit", "stand", "use", "check", "press", "scroll", "operate", "mix", "add", "fill",
    "dip", "scoop", "arrange", "climb", "enter", "leave", "go", "run", "give", "collect",
    "search", "rub", "shake", "tie", "unfold", "peel", "fix", "paint", "measure", "sew",
    "knead", "spread", "drive", "ride", "speak", "watch", "converse", "chat", "fry", "boil",
    "slice", "chop", "grab", "switch", "rinse", "dry", "hang", "raise", "lower", "rotate",
    "insert", "plug", "unplug", "type", "point", "wear", "kick", "bend", "kneel", "step",
    "sweep", "mop", "dust", "cover", "uncover", "lock", "unlock", "return", "hand", "pass",
    "bring", "fetch", "keep", "set", "lay", "flip", "squeeze", "water", "plant", "dig", "scrub"};

bool is_punct(std::string_view w) {
  return w.size() == 1 && std::string_view(".,!?;:").find(w[0]) != std::string_view::npos;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::stringstream ss{std::string(text)};
  std::string w;
  while (ss >> w) {
    std::vector<std::string> trailing;
    while (w.size() > 1 && is_punct(std::string_view(&w.back(), 1))) {
      trailing.insert(trailing.begin(), std::string(1, w.back()));
      w.pop_back();
    }
    if (!w.empty()) words.push_back(w);
    words.insert(words.end(), trailing.begin(), trailing.end());
  }
  return words;
}

bool is_number(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  });
}

bool is_proper(std::string_view w) {
  return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

class HeuristicParser {
 public:
  explicit HeuristicParser(std::vector<std::string> words) : w_(std::move(words)) {}

  std::vector<TokenAnnotation> run() {
    out_.resize(w_.size());
    out_[0] = {w_[0], "C", "PROPN", 0, "nsubj"};
    std::size_t i = 1;
    i = clause(i, 0);
    while (i < w_.size()) i = tail(i);
    if (root_ == 0) {
      // No verb: the subject stands alone.
      out_[0].deprel = "ROOT";
      out_[0].head = 0;
    } else {
      out_[0].head = static_cast<int>(root_);
    }
    for (std::size_t k = 0; k < out_.size(); ++k) {
      if (out_[k].deprel.empty()) {
        out_[k] = {w_[k], lower(w_[k]), "X", static_cast<int>(root_), "dep"};
      }
    }
    return out_;
  }

 private:
  std::string lw(std::size_t i) const { return i < w_.size() ? lower(w_[i]) : std::string(); }
  bool at_end(std::size_t i) const { return i >= w_.size(); }
  bool boundary(std::size_t i) const {
    if (at_end(i)) return true;
    const auto w = lw(i);
    return is_punct(w) || w == "and";
  }
  int id(std::size_t i) const { return static_cast<int>(i + 1); }

  // Verb plus its particle, object and prepositional phrases.
  std::size_t clause(std::size_t i, std::size_t conj_of) {
    std::size_t v = i;
    while (!at_end(v + 1) && ends_with(lw(v), "ly") && !boundary(v)) ++v;
    if (at_end(v) || boundary(v)) return i;
    for (std::size_t a = i; a < v; ++a) out_[a] = {w_[a], lw(a), "ADV", id(v), "advmod"};
    if (root_ == 0) {
      out_[v] = {w_[v], lemmatize_verb(w_[v]), "VERB", 0, "ROOT"};
      root_ = id(v);
    } else {
      out_[v] = {w_[v], lemmatize_verb(w_[v]), "VERB", id(conj_of), "conj"};
    }
    verb_ = v;
    i = v + 1;
    if (!at_end(i) && kParticles.count(lw(i))) {
      out_[i] = {w_[i], lw(i), "ADP", id(v), "prt"};
      ++i;
    }
    if (!boundary(i) && !kPrepositions.count(lw(i)) && !kParticles.count(lw(i))) {
      i = noun_phrase(i, v, "dobj");
    }
    if (!at_end(i) && kParticles.count(lw(i))) {
      out_[i] = {w_[i], lw(i), "ADP", id(v), "prt"};
      ++i;
    }
    return i;
  }

  std::size_t tail(std::size_t i) {
    const auto w = lw(i);
    if (is_punct(w)) {
      out_[i] = {w_[i], w_[i], "PUNCT", static_cast<int>(root_), "punct"};
      return i + 1;
    }
    if (w == "and") {
      if (verb_follows(i + 1)) {
        out_[i] = {w_[i], "and", "CCONJ", id(verb_), "cc"};
        const std::size_t next = clause(i + 1, verb_);
        return next == i + 1 ? i + 1 : next;
      }
      if (last_np_ != kNone && !boundary(i + 1)) {
        out_[i] = {w_[i], "and", "CCONJ", id(last_np_), "cc"};
        return noun_phrase(i + 1, last_np_, "conj");
      }
      out_[i] = {w_[i], "and", "CCONJ", id(verb_), "cc"};
      return i + 1;
    }
    if (kPrepositions.count(w)) {
      const std::size_t head = root_ == 0 ? 0 : verb_;
      if (boundary(i + 1) || kPrepositions.count(lw(i + 1))) {
        out_[i] = {w_[i], w, "ADV", id(head), "advmod"};
        return i + 1;
      }
      out_[i] = {w_[i], w, "ADP", id(head), "prep"};
      return noun_phrase(i + 1, i, "pobj");
    }
    if (kParticles.count(w)) {
      out_[i] = {w_[i], w, "ADP", id(verb_), "prt"};
      return i + 1;
    }
    out_[i] = {w_[i], w, "ADV", root_ == 0 ? 0 : id(verb_), "advmod"};
    return i + 1;
  }

  bool verb_follows(std::size_t i) const {
    if (boundary(i)) return false;
    const auto w = lw(i);
    if (kDeterminers.count(w) || kPronouns.count(w) || kPrepositions.count(w)) return false;
    if (kVerbs.count(lemmatize_verb(w))) return true;
    if (at_end(i + 1)) return false;
    const auto next = lw(i + 1);
    return kDeterminers.count(next) || kParticles.count(next) || kPrepositions.count(next) ||
           kPronouns.count(next);
  }

  bool np_stop(std::size_t i) const {
    if (boundary(i)) return true;
    const auto w = lw(i);
    return kPrepositions.count(w) || kParticles.count(w);
  }

  std::size_t noun_phrase(std::size_t i, std::size_t attach, const char* rel) {
    const int head_id = id(attach);
    std::vector<std::size_t> dets;
    while (!np_stop(i)) {
      const auto w = lw(i);
      const bool possessive_her = w == "her" && !np_stop(i + 1);
      if (!kDeterminers.count(w) && !possessive_her) break;
      dets.push_back(i++);
    }
    if (dets.empty() && !np_stop(i) && kPronouns.count(lw(i))) {
      out_[i] = {w_[i], lw(i), "PRON", head_id, rel};
      last_np_ = i;
      return i + 1;
    }
    std::vector<std::size_t> words;
    while (!np_stop(i)) words.push_back(i++);
    if (words.empty()) {
      for (auto d : dets) out_[d] = {w_[d], lw(d), "DET", head_id, "dep"};
      return i;
    }
    const std::size_t head = words.back();
    const int np_id = id(head);
    for (auto d : dets) out_[d] = {w_[d], lw(d), "DET", np_id, "det"};
    for (std::size_t k = 0; k + 1 < words.size(); ++k) {
      const auto m = words[k];
      const auto w = lw(m);
      if (is_number(w)) {
        out_[m] = {w_[m], w, "NUM", np_id, "nummod"};
      } else if (kAdjectives.count(w)) {
        out_[m] = {w_[m], w, "ADJ", np_id, "amod"};
      } else {
        out_[m] = {w_[m], w, is_proper(w_[m]) ? "PROPN" : "NOUN", np_id, "compound"};
      }
    }
    if (is_proper(w_[head])) {
      out_[head] = {w_[head], w_[head], "PROPN", head_id, rel};
    } else {
      out_[head] = {w_[head], lemmatize_noun(w_[head]), "NOUN", head_id, rel};
    }
    last_np_ = head;
    return i;
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<std::string> w_;
  std::vector<TokenAnnotation> out_;
  std::size_t root_ = 0;  // 1-based id of the main verb, 0 when none
  std::size_t verb_ = 0;  // index of the most recent verb
  std::size_t last_np_ = kNone;
};

}  // namespace

std::string lemmatize_verb(std::string_view form) {
  static const std::map<std::string, std::string> kIrregular = {
      {"has", "have"}, {"does", "do"}, {"goes", "go"}, {"is", "be"}, {"are", "be"}};
  const std::string w = lower(form);
  if (auto it = kIrregular.find(w); it != kIrregular.end()) return it->second;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  for (const char* s : {"ches", "shes", "sses", "xes", "zes", "oes"}) {
    if (ends_with(w, s)) return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() > 2) return w.substr(0, w.size() - 1);
  return w;
}

std::string lemmatize_noun(std::string_view form) {
  static const std::map<std::string, std::string, std::less<>> kIrregular = {
      {"knives", "knife"}, {"leaves", "leaf"},   {"loaves", "loaf"},  {"halves", "half"},
      {"shelves", "shelf"}, {"wolves", "wolf"},  {"men", "man"},      {"women", "woman"},
      {"children", "child"}, {"feet", "foot"},   {"teeth", "tooth"},  {"mice", "mouse"},
      {"potatoes", "potato"}, {"tomatoes", "tomato"}, {"people", "person"}};
  const std::string w = lower(form);
  if (auto it = kIrregular.find(w); it != kIrregular.end()) return it->second;
  if (w.size() <= 3) return w;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  for (const char* s : {"sses", "ches", "shes", "xes"}) {
    if (ends_with(w, s)) return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

std::vector<TokenAnnotation> heuristic_parse(std::string_view text) {
  std::vector<std::string> words;
  for (auto& w : split_words(text)) {
    if (w.size() > 1 && w[0] == '#' && lower(w) != "#c") continue;
    words.push_back(std::move(w));
  }
  if (!words.empty() && lower(words[0]) == "#c") {
    if (words.size() > 1 && words[1] == "C") {
      words.erase(words.begin());
    } else {
      words[0] = "C";
    }
  }
  if (words.empty() || words[0] != "C") return {};
  return HeuristicParser(std::move(words)).run();
}

namespace {

std::string base_rel(std::string_view deprel) {
  return lower(deprel.substr(0, deprel.find(':')));
}

}  // namespace

std::vector<ActionNode> extract_nodes(const std::vector<TokenAnnotation>& tokens,
                                      std::size_t narration_index) {
  const std::size_t n = tokens.size();
  std::vector<std::vector<std::size_t>> children(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int h = tokens[i].head;
    if (h >= 0 && static_cast<std::size_t>(h) <= n) children[h].push_back(i + 1);
  }
  const auto rel = [&](std::size_t id) { return base_rel(tokens[id - 1].deprel); };
  const auto has_case_child = [&](std::size_t id) {
    return std::any_of(children[id].begin(), children[id].end(),
                       [&](std::size_t c) { return rel(c) == "case"; });
  };

  // Attribute of an object token, following noun conjunctions to their head.
  std::function<std::optional<Attribute>(std::size_t, int)> object_attr =
      [&](std::size_t id, int depth) -> std::optional<Attribute> {
    if (depth > static_cast<int>(n)) return std::nullopt;
    const auto& t = tokens[id - 1];
    if (t.upos == "PRON" || t.upos == "VERB" || t.upos == "AUX") return std::nullopt;
    const auto r = rel(id);
    if (r == "dobj" || r == "obj") return Attribute::kDobj;
    if (r == "pobj") return Attribute::kPobj;
    if ((r == "obl" || r == "nmod") && has_case_child(id)) return Attribute::kPobj;
    if (r == "conj" && t.head > 0) return object_attr(static_cast<std::size_t>(t.head), depth + 1);
    return std::nullopt;
  };

  const auto collect_modifiers = [&](std::size_t id) {
    std::vector<std::size_t> ids{id};
    for (std::size_t k = 0; k < ids.size(); ++k) {
      for (auto c : children[ids[k]]) {
        const auto r = rel(c);
        if (r == "compound" || r == "amod" || r == "nummod" || r == "flat") ids.push_back(c);
      }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  const auto usable_lemma = [](const TokenAnnotation& t) {
    return !t.lemma.empty() && t.lemma != "_";
  };

  std::vector<ActionNode> out;
  for (std::size_t id = 1; id <= n; ++id) {
    const auto& t = tokens[id - 1];
    const auto r = rel(id);
    if (t.upos == "VERB" && (r == "root" || r == "conj" || r == "xcomp" || r == "advcl" ||
                             r == "ccomp" || r == "parataxis")) {
      ActionNode node;
      node.attribute = Attribute::kVerb;
      node.lemma_key = lower(usable_lemma(t) ? t.lemma : lemmatize_verb(t.form));
      node.surface = t.form;
      for (auto c : children[id]) {
        const auto cr = lower(tokens[c - 1].deprel);
        if (cr == "prt" || cr == "compound:prt") {
          node.surface += " " + tokens[c - 1].form;
        }
      }
      node.narration_index = narration_index;
      out.push_back(std::move(node));
      continue;
    }
    const auto attr = object_attr(id, 0);
    if (!attr) continue;
    ActionNode node;
    node.attribute = *attr;
    node.narration_index = narration_index;
    for (auto m : collect_modifiers(id)) {
      const auto& mt = tokens[m - 1];
      std::string key;
      if (m == id) {
        key = usable_lemma(mt) ? lower(mt.lemma)
                               : (mt.upos == "NOUN" ? lemmatize_noun(mt.form) : lower(mt.form));
      } else {
        key = lower(mt.form);
      }
      if (!node.surface.empty()) {
        node.surface += ' ';
        node.lemma_key += ' ';
      }
      node.surface += mt.form;
      node.lemma_key += key;
    }
    out.push_back(std::move(node));
  }
  return out;
}

void annotate_clip(Clip& clip, const std::map<std::string, std::vector<TokenAnnotation>>& sidecar,
                   bool allow_heuristic) {
  for (std::size_t i = 0; i < clip.narrations.size(); ++i) {
    auto& n = clip.narrations[i];
    if (!n.tokens) {
      if (auto it = sidecar.find(n.narration_id); it != sidecar.end()) {
        n.tokens = it->second;
        n.heuristic = false;
      } else if (allow_heuristic) {
        n.tokens = heuristic_parse(n.text);
        n.heuristic = true;
      } else {
        throw validation_error("narration " + n.narration_id + " has no parse",
                               {{"narration_id", n.narration_id}});
      }
    }
    n.nodes = extract_nodes(*n.tokens, i);
  }
}

void to_json(json& j, const TokenAnnotation& t) {
  j = json{{"form", t.form}, {"lemma", t.lemma}, {"upos", t.upos}, {"head", t.head},
           {"deprel", t.deprel}};
}

void from_json(const json& j, TokenAnnotation& t) {
  t.form = j.at("form").get<std::string>();
  t.lemma = j.value("lemma", std::string("_"));
  t.upos = j.value("upos", std::string("X"));
  t.head = j.at("head").get<int>();
  t.deprel = j.at("deprel").get<std::string>();
}

void to_json(json& j, const ActionNode& n) {
  j = json{{"attribute", to_string(n.attribute)},
           {"lemma_key", n.lemma_key},
           {"surface", n.surface},
           {"narration_index", n.narration_index}};
}

void from_json(const json& j, ActionNode& n) {
  n.attribute = attribute_from_string(j.at("attribute").get<std::string>());
  n.lemma_key = j.at("lemma_key").get<std::string>();
  n.surface = j.value("surface", n.lemma_key);
  n.narration_index = j.value("narration_index", std::size_t{0});
}

void to_json(json& j, const Narration& n) {
  j = json{{"narration_id", n.narration_id},
           {"video_id", n.video_id},
           {"start", json_number(n.start)},
           {"end", json_number(n.end)},
           {"text", n.text}};
  if (n.tokens) j["tokens"] = *n.tokens;
  if (n.heuristic) j["heuristic"] = true;
  if (!n.nodes.empty()) j["nodes"] = n.nodes;
}

void from_json(const json& j, Narration& n) {
  n.narration_id = j.value("narration_id", std::string());
  n.video_id = j.value("video_id", std::string());
  n.start = j.at("start").get<double>();
  n.end = j.value("end", n.start);
  n.text = j.at("text").get<std::string>();
  if (j.contains("tokens")) n.tokens = j.at("tokens").get<std::vector<TokenAnnotation>>();
  n.heuristic = j.value("heuristic", false);
  if (j.contains("nodes")) n.nodes = j.at("nodes").get<std::vector<ActionNode>>();
}

void to_json(json& j, const Clip& c) {
  j = json{{"clip_id", c.clip_id},
           {"video_id", c.video_id},
           {"window", c.window},
           {"narrations", c.narrations}};
}

void from_json(const json& j, Clip& c) {
  c.clip_id = j.at("clip_id").get<std::string>();
  c.video_id = j.value("video_id", std::string());
  c.window = j.at("window").get<TimeSpan>();
  c.narrations = j.at("narrations").get<std::vector<Narration>>();
}

}  // namespace mhqa
