#include "mhqa/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include "mhqa/error.hpp"
#include "mhqa/llm_client.hpp"

namespace mhqa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view to_string(ReviewAction a) {
  switch (a) {
    case ReviewAction::kAccept: return "accept";
    case ReviewAction::kAdjust: return "adjust";
    case ReviewAction::kReject: return "reject";
  }
  return "accept";
}

json to_json(const ReviewDecision& d) {
  json j{{"decision_id", d.decision_id},
         {"triplet_id", d.triplet_id},
         {"reviewer_id", d.reviewer_id},
         {"action", to_string(d.action)},
         {"category", d.category ? json(std::string(1, *d.category)) : json(nullptr)},
         {"timestamp", d.timestamp}};
  if (d.adjusted_answer) j["adjusted_answer"] = *d.adjusted_answer;
  if (d.adjusted_span_map) j["adjusted_span_map"] = span_map_to_json(*d.adjusted_span_map);
  return j;
}

ReviewDecision decision_from_json(const json& j) {
  if (!j.is_object()) throw validation_error("decision must be a JSON object", {{"field", ""}});
  const auto need_string = [&](const char* field) {
    if (!j.contains(field) || !j[field].is_string() || j[field].get<std::string>().empty()) {
      throw validation_error(std::string(field) + " is required", {{"field", field}});
    }
    return j[field].get<std::string>();
  };
  ReviewDecision d;
  d.decision_id = need_string("decision_id");
  d.reviewer_id = need_string("reviewer_id");
  if (j.contains("triplet_id") && j["triplet_id"].is_string()) {
    d.triplet_id = j["triplet_id"].get<std::string>();
  }
  const auto action = need_string("action");
  if (action == "accept") {
    d.action = ReviewAction::kAccept;
  } else if (action == "adjust") {
    d.action = ReviewAction::kAdjust;
  } else if (action == "reject") {
    d.action = ReviewAction::kReject;
  } else {
    throw validation_error("action must be accept, adjust or reject", {{"field", "action"}});
  }
  if (j.contains("category") && !j["category"].is_null()) {
    if (!j["category"].is_string() || j["category"].get<std::string>().size() != 1 ||
        !valid_category(j["category"].get<std::string>()[0])) {
      throw validation_error("category must be one of A-F or U", {{"field", "category"}});
    }
    d.category = j["category"].get<std::string>()[0];
  }
  if (j.contains("adjusted_answer") && !j["adjusted_answer"].is_null()) {
    if (!j["adjusted_answer"].is_string()) {
      throw validation_error("adjusted_answer must be a string", {{"field", "adjusted_answer"}});
    }
    d.adjusted_answer = j["adjusted_answer"].get<std::string>();
  }
  if (j.contains("adjusted_span_map") && !j["adjusted_span_map"].is_null()) {
    try {
      d.adjusted_span_map = span_map_from_json(j["adjusted_span_map"]);
    } catch (const Error& e) {
      const std::string field = e.details().value("field", std::string("span_map"));
      throw validation_error(e.what(), {{"field", "adjusted_" + field}});
    }
  }
  if (j.contains("timestamp") && j["timestamp"].is_string()) {
    d.timestamp = j["timestamp"].get<std::string>();
  }

  switch (d.action) {
    case ReviewAction::kReject:
      if (d.category && *d.category != 'U') {
        throw validation_error("a rejected triplet must be category U", {{"field", "category"}});
      }
      d.category = 'U';
      break;
    case ReviewAction::kAccept:
    case ReviewAction::kAdjust:
      if (!d.category || *d.category == 'U') {
        throw validation_error("accept and adjust need a category A-F", {{"field", "category"}});
      }
      if (d.action == ReviewAction::kAdjust && !d.adjusted_answer && !d.adjusted_span_map) {
        throw validation_error("adjust needs adjusted_answer or adjusted_span_map",
                               {{"field", "adjusted_span_map"}});
      }
      break;
  }
  return d;
}

bool decisions_equivalent(const ReviewDecision& a, const ReviewDecision& b) {
  return a.decision_id == b.decision_id && a.triplet_id == b.triplet_id &&
         a.reviewer_id == b.reviewer_id && a.action == b.action && a.category == b.category &&
         a.adjusted_answer == b.adjusted_answer && a.adjusted_span_map == b.adjusted_span_map;
}

Triplet apply_decision(Triplet t, const ReviewDecision& d) {
  if (t.status != TripletStatus::kLlmFiltered) {
    throw Error(ErrorKind::kConflict,
                "triplet " + t.triplet_id + " is " + std::string(to_string(t.status)) +
                    ", expected llm_filtered",
                {{"triplet_id", t.triplet_id}, {"status", to_string(t.status)}});
  }
  switch (d.action) {
    case ReviewAction::kAccept:
      t.status = TripletStatus::kAccepted;
      t.category = d.category;
      break;
    case ReviewAction::kAdjust:
      if (d.adjusted_answer) t.answer = *d.adjusted_answer;
      if (d.adjusted_span_map) t.span_map = *d.adjusted_span_map;
      if (auto v = validate_triplet(t)) {
        const std::string field = v->field.rfind("span_map", 0) == 0 ? "adjusted_" + v->field
                                  : v->field == "answer"             ? "adjusted_answer"
                                                                     : v->field;
        throw validation_error(v->message, {{"field", field}, {"code", v->code}});
      }
      t.status = TripletStatus::kAccepted;
      t.category = d.category;
      break;
    case ReviewAction::kReject:
      t.status = TripletStatus::kRejected;
      t.category = 'U';
      break;
  }
  t.history.push_back(d.decision_id);
  return t;
}

namespace {

std::string encode_line(const json& entry) {
  const std::string body = entry.dump();
  return fnv1a_hex(body) + "\t" + body + "\n";
}

fs::path snapshot_path(const fs::path& root, const std::string& name) {
  return root / (name + ".snapshot.jsonl");
}

fs::path log_path(const fs::path& root, const std::string& name) {
  return root / (name + ".log.jsonl");
}

// Reads checksummed lines and calls fn(entry) for each.
template <typename Fn>
void read_lines(const fs::path& path, Fn fn) {
  if (!fs::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIntegrity, "cannot read " + path.string());
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (in.eof()) {
      throw Error(ErrorKind::kIntegrity, "truncated record in " + path.string(),
                  {{"file", path.string()}, {"offset", line_offset}});
    }
    const auto tab = line.find('\t');
    const auto bad = [&](const std::string& why) {
      return Error(ErrorKind::kIntegrity, why + " in " + path.string() + " at byte " +
                                              std::to_string(line_offset),
                   {{"file", path.string()}, {"offset", line_offset}});
    };
    if (tab != 16) throw bad("malformed record");
    const std::string_view body(line.data() + 17, line.size() - 17);
    if (fnv1a_hex(body) != line.substr(0, 16)) throw bad("checksum mismatch");
    json entry;
    try {
      entry = json::parse(body);
    } catch (const json::parse_error&) {
      throw bad("unparseable record");
    }
    if (!entry.is_object() || !entry.contains("key") || !entry["key"].is_string()) {
      throw bad("record without key");
    }
    fn(entry);
  }
}

void append_file(const fs::path& path, const std::string& text) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) {
    throw Error(ErrorKind::kIntegrity, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  std::size_t written = 0;
  while (written < text.size()) {
    const auto n = ::write(fd, text.data() + written, text.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(ErrorKind::kIntegrity, "append failed for " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

bool field_matches(const json& record, const std::string& field, const std::string& want) {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) return want.empty();
  if (it->is_string()) return it->get<std::string>() == want;
  if (it->is_boolean()) return (it->get<bool>() ? "true" : "false") == want;
  if (it->is_number()) return it->dump() == want;
  return false;
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  const auto meta = root_ / "store.json";
  if (fs::exists(meta)) {
    std::ifstream in(meta);
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      throw Error(ErrorKind::kIntegrity, "unreadable " + meta.string());
    }
    if (j.value("schema_version", 0) != kStoreSchemaVersion) {
      throw Error(ErrorKind::kIntegrity, "store schema version mismatch in " + meta.string());
    }
  } else {
    write_file_atomic(meta, json{{"schema_version", kStoreSchemaVersion}}.dump() + "\n");
  }
  for (const auto& name : store_collections()) load(name);
}

void Store::load(const std::string& name) {
  auto& coll = data_[name];
  read_lines(snapshot_path(root_, name), [&](const json& e) { coll[e["key"]] = e.at("record"); });
  read_lines(log_path(root_, name), [&](const json& e) { coll[e["key"]] = e.at("record"); });
}

Store::Collection& Store::collection(const std::string& name) {
  auto it = data_.find(name);
  if (it == data_.end()) throw validation_error("unknown collection '" + name + "'");
  return it->second;
}

const Store::Collection& Store::collection(const std::string& name) const {
  auto it = data_.find(name);
  if (it == data_.end()) throw validation_error("unknown collection '" + name + "'");
  return it->second;
}

void Store::append(const std::string& name, const std::string& key, const json& record) {
  append_file(log_path(root_, name), encode_line(json{{"key", key}, {"record", record}}));
}

void Store::put_locked(const std::string& name, const std::string& key, const json& record) {
  if (!record.is_object()) throw validation_error("records must be JSON objects");
  auto& coll = collection(name);
  append(name, key, record);
  coll[key] = record;
}

std::optional<json> Store::get(const std::string& name, const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto& coll = collection(name);
  if (auto it = coll.find(key); it != coll.end()) {
    return std::optional<json>(std::in_place, it->second);
  }
  return std::nullopt;
}

std::vector<json> Store::list(const std::string& name, const FieldFilter& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<json> out;
  for (const auto& [key, record] : collection(name)) {
    bool ok = true;
    for (const auto& [field, want] : filter) {
      if (!field_matches(record, field, want)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(record);
  }
  return out;
}

std::vector<std::string> Store::keys(const std::string& name) const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [key, record] : collection(name)) out.push_back(key);
  return out;
}

std::size_t Store::size(const std::string& name) const {
  std::shared_lock lock(mutex_);
  return collection(name).size();
}

void Store::insert(const std::string& name, const std::string& key, const json& record) {
  std::unique_lock lock(mutex_);
  if (collection(name).count(key)) {
    throw Error(ErrorKind::kConflict, "key " + key + " already exists in " + name,
                {{"collection", name}, {"key", key}});
  }
  put_locked(name, key, record);
}

void Store::upsert(const std::string& name, const std::string& key, const json& record) {
  std::unique_lock lock(mutex_);
  put_locked(name, key, record);
}

void Store::compact() {
  std::unique_lock lock(mutex_);
  for (const auto& [name, coll] : data_) {
    std::string text;
    for (const auto& [key, record] : coll) text += encode_line(json{{"key", key}, {"record", record}});
    write_file_atomic(snapshot_path(root_, name), text);
    write_file_atomic(log_path(root_, name), "");
  }
}

Triplet Store::apply_review(ReviewDecision d) {
  if (d.timestamp.empty()) d.timestamp = utc_timestamp();
  std::unique_lock lock(mutex_);
  auto& decisions = collection("decisions");
  if (auto it = decisions.find(d.decision_id); it != decisions.end()) {
    const auto previous = decision_from_json(it->second);
    if (!decisions_equivalent(previous, d)) {
      throw Error(ErrorKind::kConflict,
                  "decision " + d.decision_id + " was already applied with different content",
                  {{"decision_id", d.decision_id}});
    }
    const auto& triplets = collection("triplets");
    return triplet_from_json(triplets.at(previous.triplet_id));
  }
  auto& triplets = collection("triplets");
  const auto found = triplets.find(d.triplet_id);
  if (found == triplets.end()) {
    throw Error(ErrorKind::kNotFound, "no triplet " + d.triplet_id, {{"triplet_id", d.triplet_id}});
  }
  const Triplet before = triplet_from_json(found->second);
  const Triplet after = apply_decision(before, d);
  if (!collection("review_base").count(d.triplet_id)) {
    put_locked("review_base", d.triplet_id, to_json(before));
  }
  put_locked("decisions", d.decision_id, to_json(d));
  put_locked("triplets", d.triplet_id, to_json(after));
  return after;
}

std::map<std::string, Triplet> Store::replay_reviews() const {
  std::shared_lock lock(mutex_);
  const auto& decisions = collection("decisions");
  std::map<std::string, Triplet> out;
  for (const auto& [id, record] : collection("review_base")) {
    Triplet t = triplet_from_json(record);
    const Triplet base = t;
    const auto& current = collection("triplets").at(id);
    for (const auto& decision_id : current.value("history", std::vector<std::string>{})) {
      if (std::find(base.history.begin(), base.history.end(), decision_id) != base.history.end()) {
        continue;
      }
      t = apply_decision(std::move(t), decision_from_json(decisions.at(decision_id)));
    }
    out.emplace(id, std::move(t));
  }
  return out;
}

std::vector<json> Store::export_accepted() const {
  std::vector<json> out;
  for (const auto& record : list("triplets", {{"status", "accepted"}})) {
    const Triplet t = triplet_from_json(record);
    out.push_back(json{{"triplet_id", t.triplet_id},
                       {"clip_id", t.clip_id},
                       {"question", t.question},
                       {"answer", t.answer},
                       {"span_map", span_map_to_json(t.span_map)},
                       {"evidence", t.evidence()},
                       {"category", t.category ? std::string(1, *t.category) : std::string()}});
  }
  return out;
}

}  // namespace mhqa
