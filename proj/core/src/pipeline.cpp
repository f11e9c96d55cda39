#include "mhqa/pipeline.hpp"

#include <algorithm>
#include <set>

#include "mhqa/error.hpp"
#include "mhqa/genfilter.hpp"
#include "mhqa/parallel.hpp"
#include "mhqa/prompts.hpp"

namespace mhqa {

namespace fs = std::filesystem;
using nlohmann::json;

std::filesystem::path checkpoint_path(const Store& store) { return store.root() / "checkpoint.json"; }

std::vector<Clip> build_clips(const Corpus& corpus, const Sidecar& sidecar, bool allow_heuristic,
                              std::vector<std::string>* warnings) {
  std::map<std::string, std::vector<Narration>> by_video;
  for (const auto& n : corpus.narrations) by_video[n.video_id].push_back(n);
  std::vector<Clip> out;
  for (auto& [video, narrations] : by_video) {
    double duration = 0.0;
    if (auto it = corpus.durations.find(video); it != corpus.durations.end()) {
      duration = it->second;
    } else {
      for (const auto& n : narrations) duration = std::max(duration, n.start);
      if (warnings) {
        warnings->push_back("video " + video + ": no duration given, using last narration start " +
                            format_number(duration));
      }
    }
    if (!(duration > 0.0)) {
      if (warnings) warnings->push_back("video " + video + ": zero duration, no clips");
      continue;
    }
    for (auto& clip : segment_clips(video, duration, narrations)) {
      annotate_clip(clip, sidecar, allow_heuristic);
      out.push_back(std::move(clip));
    }
  }
  return out;
}

json stage_segment(Store& store, const std::vector<Clip>& clips, const ClipRules& rules) {
  std::size_t accepted = 0;
  json rejected = json::object();
  for (const auto& clip : clips) {
    const auto decision = filter_clip(clip, rules);
    json record = clip;
    record["filter"] = decision;
    store.upsert("clips", clip.clip_id, record);
    if (decision.accept) {
      ++accepted;
    } else {
      rejected[decision.reason] = rejected.value(decision.reason, 0) + 1;
    }
  }
  return json{{"clips", clips.size()}, {"accepted", accepted}, {"rejected", rejected}};
}

json stage_mine(Store& store, const MiningRules& rules) {
  std::size_t clips = 0, candidates = 0;
  for (const auto& record : store.list("clips")) {
    if (!record.at("filter").at("accept").get<bool>()) continue;
    ++clips;
    const Clip clip = record.get<Clip>();
    for (const auto& c : find_candidates(build_graph(clip), clip, rules)) {
      store.upsert("candidates", c.candidate_id, c);
      ++candidates;
    }
  }
  return json{{"clips", clips}, {"candidates", candidates}};
}

namespace {

struct CallResult {
  bool ok = false;
  std::string text;
  std::string error;
};

CallResult call_with_retries(LlmClient& client, const ChatRequest& req, std::size_t max_retries) {
  CallResult r;
  for (std::size_t attempt = 0; attempt <= max_retries; ++attempt) {
    try {
      r.text = client.complete(req);
      r.ok = true;
      return r;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport) throw;
      r.error = e.what();
    }
  }
  return r;
}

[[noreturn]] void fail_with_checkpoint(const Store& store, const std::string& stage,
                                       const std::vector<std::string>& failed,
                                       const std::string& first_error) {
  const json checkpoint{{"stage", stage}, {"failed", failed}, {"error", first_error}};
  write_file_atomic(checkpoint_path(store), checkpoint.dump(2) + "\n");
  throw Error(ErrorKind::kTransport,
              std::to_string(failed.size()) + " " + stage +
                  " request(s) failed after retries; progress saved, rerun to resume",
              {{"checkpoint", checkpoint_path(store).string()}, {"failed", failed},
               {"error", first_error}});
}

}  // namespace

json stage_generate(Store& store, LlmClient& client, const PipelineOptions& opts) {
  std::vector<MiningCandidate> todo;
  for (const auto& record : store.list("candidates")) {
    const auto id = record.at("candidate_id").get<std::string>();
    if (store.get("triplets", id) || store.get("rejections", id)) continue;
    todo.push_back(record.get<MiningCandidate>());
  }
  std::vector<ChatRequest> requests;
  requests.reserve(todo.size());
  for (const auto& c : todo) {
    requests.push_back(render_prompt(c, opts.generation_model, opts.temperature, opts.json_mode));
  }
  const auto results = parallel_map(todo.size(), opts.parallelism, [&](std::size_t i) {
    return call_with_retries(client, requests[i], opts.max_retries);
  });

  std::size_t generated = 0, rejected = 0;
  std::vector<std::string> failed;
  std::string first_error;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const auto& c = todo[i];
    if (!results[i].ok) {
      failed.push_back(c.candidate_id);
      if (first_error.empty()) first_error = results[i].error;
      continue;
    }
    Provenance prov;
    prov.candidate_id = c.candidate_id;
    prov.template_id = template_id_for(c.node.attribute);
    prov.model = opts.generation_model;
    prov.prompt_version = std::string(prompts::kVersion);
    auto outcome = parse_generation(results[i].text);
    prov.repairs = outcome.repairs;
    if (outcome.triplet) {
      Triplet t = std::move(*outcome.triplet);
      t.triplet_id = c.candidate_id;
      t.clip_id = c.clip_id;
      t.provenance = prov;
      store.upsert("triplets", t.triplet_id, to_json(t));
      ++generated;
    } else {
      Rejection r{c.candidate_id, c.candidate_id, c.clip_id, "generation", *outcome.violation,
                  results[i].text, prov};
      store.upsert("rejections", r.rejection_id, to_json(r));
      ++rejected;
    }
  }
  if (!failed.empty()) fail_with_checkpoint(store, "generate", failed, first_error);
  return json{{"requested", todo.size()}, {"generated", generated}, {"rejected", rejected}};
}

json stage_filter(Store& store, LlmClient& client, const PipelineOptions& opts) {
  std::vector<Triplet> todo;
  for (const auto& record : store.list("triplets", {{"status", "generated"}})) {
    todo.push_back(triplet_from_json(record));
  }
  std::vector<ChatRequest> requests;
  for (const auto& t : todo) {
    requests.push_back(render_filter_request(t, opts.filter_model, opts.temperature, opts.json_mode));
  }
  const auto results = parallel_map(todo.size(), opts.parallelism, [&](std::size_t i) {
    return call_with_retries(client, requests[i], opts.max_retries);
  });
  std::size_t kept = 0, dropped = 0;
  json unparseable = json::array();
  std::vector<std::string> failed;
  std::string first_error;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    Triplet t = todo[i];
    if (!results[i].ok) {
      failed.push_back(t.triplet_id);
      if (first_error.empty()) first_error = results[i].error;
      continue;
    }
    FilterVerdict v;
    try {
      v = parse_filter_verdict(results[i].text);
    } catch (const Error& e) {
      unparseable.push_back({{"triplet_id", t.triplet_id}, {"raw", results[i].text}});
      continue;
    }
    t.filter = FilterRecord{v.judgement, v.rationale};
    t.status = v.keep ? TripletStatus::kLlmFiltered : TripletStatus::kRejected;
    store.upsert("triplets", t.triplet_id, to_json(t));
    (v.keep ? kept : dropped)++;
  }
  if (!failed.empty()) fail_with_checkpoint(store, "filter", failed, first_error);
  return json{{"requested", todo.size()}, {"kept", kept}, {"dropped", dropped},
              {"unparseable", unparseable}};
}

json store_counts(const Store& store) {
  json clips_rejected = json::object();
  std::size_t clips = 0, accepted = 0;
  for (const auto& c : store.list("clips")) {
    ++clips;
    const auto& f = c.at("filter");
    if (f.at("accept").get<bool>()) {
      ++accepted;
    } else {
      const auto reason = f.at("reason").get<std::string>();
      clips_rejected[reason] = clips_rejected.value(reason, 0) + 1;
    }
  }
  json by_status = json::object();
  std::size_t filter_dropped = 0;
  for (const auto& t : store.list("triplets")) {
    const auto status = t.at("status").get<std::string>();
    by_status[status] = by_status.value(status, 0) + 1;
    if (t.contains("filter") && t["filter"].value("judgement", 0) == 1) ++filter_dropped;
  }
  json by_reason = json::object();
  for (const auto& r : store.list("rejections")) {
    const auto reason = r.at("reason").get<std::string>();
    by_reason[reason] = by_reason.value(reason, 0) + 1;
  }
  return json{{"clips", clips},
              {"clips_accepted", accepted},
              {"clips_rejected", clips_rejected},
              {"candidates", store.size("candidates")},
              {"triplets", store.size("triplets")},
              {"triplets_by_status", by_status},
              {"llm_filter_dropped", filter_dropped},
              {"generation_rejections", store.size("rejections")},
              {"generation_rejections_by_reason", by_reason}};
}

json run_pipeline(const Corpus& input, const Sidecar& sidecar, LlmClient& client, Store& store,
                  const PipelineOptions& opts) {
  const auto report = [&](const std::string& stage, const json& counts) {
    if (opts.progress) opts.progress(stage, counts);
  };
  Corpus corpus = input;
  canonicalize(corpus);
  std::vector<std::string> warnings;
  const auto clips = build_clips(corpus, sidecar, opts.allow_heuristic, &warnings);
  report("segment", stage_segment(store, clips, opts.clip_rules));
  report("mine", stage_mine(store, opts.mining_rules));
  report("generate", stage_generate(store, client, opts));
  const auto filtered = stage_filter(store, client, opts);
  report("filter", filtered);

  const json counts = store_counts(store);
  if (counts.at("clips_accepted").get<std::size_t>() == 0) {
    warnings.push_back("no clip passed the rule-based filter");
  }
  for (const auto& u : filtered.at("unparseable")) {
    warnings.push_back("unparseable filter verdict for " + u.at("triplet_id").get<std::string>());
  }
  const json run{{"run_id", opts.run_id},
                 {"kind", "pipeline"},
                 {"prompt_version", prompts::kVersion},
                 {"config", opts.config},
                 {"counts", counts},
                 {"warnings", warnings}};
  store.upsert("runs", opts.run_id, run);
  store.compact();
  std::error_code ec;
  fs::remove(checkpoint_path(store), ec);
  return run;
}

}  // namespace mhqa
