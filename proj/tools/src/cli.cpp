#include "mhqa/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "mhqa/error.hpp"
#include "mhqa/genfilter.hpp"
#include "mhqa/grounding.hpp"
#include "mhqa/narrations.hpp"
#include "mhqa/pipeline.hpp"
#include "mhqa/proposals.hpp"
#include "mhqa/service.hpp"
#include "mhqa/stats.hpp"
#include "mhqa/store.hpp"

namespace mhqa::cli {

using nlohmann::json;

namespace {

std::string env_or_empty(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path, {{"path", path}});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw validation_error(path + ": " + e.what(), {{"path", path}});
  }
}

Sidecar read_sidecar(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path, {{"path", path}});
  return read_conllu(in);
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, text);
}

// First present key among `keys` parsed as a span list; a span map is flattened.
std::optional<SpanSet> spans_field(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (!j.contains(key) || j[key].is_null()) continue;
    const auto& v = j[key];
    try {
      if (v.is_object()) {
        std::vector<TimeSpan> all;
        for (const auto& [_, spans] : span_map_from_json(v)) all.insert(all.end(), spans.begin(), spans.end());
        return normalize(all);
      }
      return v.get<SpanSet>();
    } catch (const Error& e) {
      throw validation_error(e.what(), {{"field", key}});
    } catch (const json::exception& e) {
      throw validation_error(std::string("malformed ") + key + ": " + e.what(), {{"field", key}});
    }
  }
  return std::nullopt;
}

std::optional<std::string> string_field(const json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  }
  return std::nullopt;
}

void print_summary(std::ostream& out, const json& summary, bool as_json) {
  if (as_json) {
    out << summary.dump(2) << "\n";
    return;
  }
  for (const auto& [k, v] : summary.items()) {
    out << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  }
}

struct Globals {
  std::string config_file;
  std::vector<std::string> overrides;
  bool as_json = false;
  std::string store;
};

RunConfig resolve(const Globals& g, std::vector<std::string> extra) {
  auto overrides = g.overrides;
  if (!g.store.empty()) overrides.push_back("store.path=" + g.store);
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  RunConfig cfg = load_config(g.config_file, overrides);
  return cfg;
}

PipelineOptions pipeline_options(const RunConfig& cfg) {
  PipelineOptions o;
  o.clip_rules = cfg.clip;
  o.mining_rules = cfg.mining;
  o.generation_model = cfg.llm_model;
  o.filter_model = cfg.filter_model;
  o.temperature = cfg.temperature;
  o.json_mode = cfg.json_mode;
  o.parallelism = cfg.parallelism;
  o.max_retries = cfg.max_retries;
  o.allow_heuristic = cfg.allow_heuristic;
  o.config = cfg.to_json();
  return o;
}

Corpus load_corpus(const std::string& path) {
  Corpus c = read_narrations_file(path);
  canonicalize(c);
  return c;
}

json proposals_command(const RunConfig& cfg, const std::string& saliency_file,
                       const std::string& similarity_file, std::optional<double> coef) {
  if (saliency_file.empty() == similarity_file.empty()) {
    throw validation_error("give exactly one of --saliency or --similarity", {{"field", "saliency"}});
  }
  const bool saliency = !saliency_file.empty();
  const json input = read_json_file(saliency ? saliency_file : similarity_file);
  const json params = input.is_object() ? input : json::object();
  proposals::FrameAxis axis;
  axis.frames_per_second = params.value("fps", cfg.frames_per_second);
  axis.clip_offset = params.value("offset", 0.0);
  if (saliency) {
    const double c = coef.value_or(params.value("coef", cfg.saliency_coef));
    std::vector<double> scores;
    if (input.is_array()) {
      scores = input.get<std::vector<double>>();
    } else if (params.contains("saliency")) {
      scores = params["saliency"].get<std::vector<double>>();
    } else if (params.contains("saliency_logits")) {
      scores = grounding::saliency_scores(params["saliency_logits"].get<std::vector<double>>());
    } else {
      throw validation_error("fixture needs saliency or saliency_logits", {{"field", "saliency"}});
    }
    return json{{"spans", proposals::saliency_to_spans(scores, c, axis)}};
  }
  const double c = coef.value_or(params.value("coef", cfg.similarity_coef));
  const double tau = params.value("tau", cfg.proposal_tau);
  grounding::Matrix sim = input.is_array() ? input.get<grounding::Matrix>()
                                           : params.at("similarity").get<grounding::Matrix>();
  const auto rows = proposals::per_row_spans(sim, tau, c, axis);
  json per_row = json::array();
  for (const auto& r : rows) per_row.push_back(r);
  return json{{"per_row", per_row}, {"spans", proposals::similarity_to_spans(sim, tau, c, axis)}};
}

json eval_command(const RunConfig& cfg, const std::string& pred, const std::string& gt,
                  bool judge, bool similarity, const std::string& csv, const std::string& run_id) {
  auto samples = join_eval_inputs(read_records(pred), read_records(gt));
  if (judge) {
    auto client = make_llm_client(cfg);
    metrics::judge_all(samples, *client, cfg.judge_model, cfg.parallelism);
  }
  if (similarity) {
    auto embedder = make_embedding_client(cfg);
    metrics::score_answer_similarity(samples, *embedder);
  }
  const auto report = metrics::aggregate(samples, cfg.iou_thresholds, cfg.precision_thresholds);
  if (!csv.empty()) write_text(csv, metrics::per_sample_csv(report));
  json j = metrics::to_json(report);
  if (!run_id.empty()) {
    Store store(cfg.store_path);
    store.upsert("runs", run_id, json{{"run_id", run_id}, {"kind", "eval"}, {"metrics", j}});
  }
  return j;
}

json losses_command(const RunConfig& cfg, const std::string& path, bool check, double tol) {
  json j = read_json_file(path);
  if (!j.contains("tau")) j["tau"] = cfg.tau;
  if (!j.contains("lambda_bce")) j["lambda_bce"] = cfg.lambda_bce;
  if (!j.contains("lambda_nce")) j["lambda_nce"] = cfg.lambda_nce;
  const auto inst = grounding::instance_from_json(j);
  const auto loss = grounding::evaluate(inst);
  json out{{"bce", loss.bce}, {"nce", loss.nce}, {"total", loss.total},
           {"saliency", grounding::saliency_scores(inst.saliency_logits)},
           {"similarity", inst.similarity_or_cosine()}};
  if (check) out["grad_check"] = grounding::to_json(grounding::grad_check(inst, tol));
  return out;
}

}  // namespace

std::shared_ptr<LlmClient> make_llm_client(const RunConfig& cfg) {
  std::shared_ptr<LlmClient> client;
  const auto http = [&] {
    return std::make_shared<HttpLlmClient>(HttpEndpoint{
        cfg.llm_endpoint, env_or_empty(cfg.api_key_env), std::chrono::seconds(cfg.timeout_s)});
  };
  if (cfg.llm_mode == "replay") {
    client = std::make_shared<ReplayLlmClient>(cfg.fixtures_dir);
  } else if (cfg.llm_mode == "record") {
    client = std::make_shared<RecordingLlmClient>(http(), cfg.fixtures_dir);
  } else if (cfg.llm_mode == "http") {
    client = http();
  } else {
    throw validation_error("llm.mode must be http, replay or record", {{"field", "llm.mode"}});
  }
  if (cfg.min_interval_ms > 0) {
    client = std::make_shared<RateLimitedClient>(client, std::chrono::milliseconds(cfg.min_interval_ms));
  }
  return client;
}

std::unique_ptr<EmbeddingClient> make_embedding_client(const RunConfig& cfg) {
  if (cfg.embed_mode == "replay") return std::make_unique<ReplayEmbeddingClient>(cfg.embed_fixtures_dir);
  if (cfg.embed_mode == "http") {
    return std::make_unique<HttpEmbeddingClient>(
        HttpEndpoint{cfg.embed_endpoint, env_or_empty(cfg.api_key_env),
                     std::chrono::seconds(cfg.timeout_s)},
        cfg.embed_model);
  }
  throw validation_error("embed.mode must be http or replay", {{"field", "embed.mode"}});
}

std::vector<metrics::SampleEval> join_eval_inputs(const std::vector<json>& predictions,
                                                  const std::vector<json>& ground_truth) {
  std::map<std::string, const json*> preds;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    if (!p.is_object() || !p.contains("sample_id")) {
      throw validation_error("prediction line " + std::to_string(i + 1) + " lacks sample_id",
                             {{"field", "predictions[" + std::to_string(i) + "].sample_id"}});
    }
    const auto id = p["sample_id"].get<std::string>();
    if (!preds.emplace(id, &p).second) {
      throw validation_error("duplicate prediction for " + id, {{"field", "sample_id"}});
    }
  }
  std::vector<metrics::SampleEval> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const auto& g = ground_truth[i];
    if (!g.is_object() || !g.contains("sample_id")) {
      throw validation_error("ground-truth line " + std::to_string(i + 1) + " lacks sample_id",
                             {{"field", "ground_truth[" + std::to_string(i) + "].sample_id"}});
    }
    metrics::SampleEval s;
    s.sample_id = g["sample_id"].get<std::string>();
    if (!seen.insert(s.sample_id).second) {
      throw validation_error("duplicate ground truth for " + s.sample_id, {{"field", "sample_id"}});
    }
    auto gt = spans_field(g, {"ground_truth", "span_map", "evidence", "spans"});
    if (!gt) {
      throw validation_error("ground truth for " + s.sample_id + " has no spans",
                             {{"field", "ground_truth"}});
    }
    s.ground_truth = *gt;
    s.question = string_field(g, {"question"});
    s.reference_answer = string_field(g, {"reference_answer", "answer"});
    s.time_question = g.value("time_question", false);
    if (auto it = preds.find(s.sample_id); it != preds.end()) {
      const json& p = *it->second;
      if (auto spans = spans_field(p, {"prediction", "evidence", "spans"})) {
        s.prediction = *spans;
        s.predicted_answer = string_field(p, {"predicted_answer", "answer"});
      } else if (auto text = string_field(p, {"response"})) {
        const auto parsed = metrics::parse_model_response(*text);
        s.prediction = parsed.evidence;
        s.predicted_answer = parsed.answer;
      } else {
        s.predicted_answer = string_field(p, {"predicted_answer", "answer"});
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-hop grounded video QA curation and evaluation toolkit", "mhqa"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_file, "Config file (commented INI or .json)");
  app.add_option("--set", g.overrides, "Override a config key, section.key=value (repeatable)");
  app.add_flag("--json", g.as_json, "Print a JSON summary");
  app.add_option("--store", g.store, "Store directory (store.path)");

  std::string narrations, conllu, out_file, run_id, eval_run_id;
  auto* ingest = app.add_subcommand("ingest", "Read and canonicalize a narration file");
  ingest->add_option("--narrations", narrations, "CSV or JSONL narrations")->required();
  ingest->add_option("--out", out_file, "Write canonical narrations as JSONL");

  auto* segment = app.add_subcommand("segment", "Cut 3-minute clips, annotate and rule-filter them");
  segment->add_option("--narrations", narrations, "CSV or JSONL narrations")->required();
  segment->add_option("--conllu", conllu, "Dependency annotations keyed by narration id");

  auto* mine = app.add_subcommand("mine", "Find recurring action nodes in accepted clips");
  auto* generate = app.add_subcommand("generate", "Prompt the LLM for every open candidate");
  auto* filter = app.add_subcommand("filter", "Run the LLM filtration prompt on generated triplets");

  auto* pipeline = app.add_subcommand("pipeline", "segment, mine, generate and filter in one run");
  pipeline->add_option("--narrations", narrations, "CSV or JSONL narrations")->required();
  pipeline->add_option("--conllu", conllu, "Dependency annotations keyed by narration id");
  pipeline->add_option("--run-id", run_id, "Key of the run record")->default_val("pipeline");

  std::string host;
  int port = 0;
  auto* serve = app.add_subcommand("review-serve", "Serve the review HTTP API");
  serve->add_option("--host", host, "Bind address (service.host)");
  serve->add_option("--port", port, "Port (service.port)");

  std::string pred, gt, csv;
  bool judge = false, similarity = false;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", pred, "Predictions (JSONL or JSON array)")->required();
  eval->add_option("--gt", gt, "Ground truth (JSONL or JSON array)")->required();
  eval->add_flag("--judge", judge, "Score answers with the LLM judge");
  eval->add_flag("--similarity", similarity, "Score answers by embedding cosine similarity");
  eval->add_option("--csv", csv, "Write the per-sample table");
  eval->add_option("--run-id", eval_run_id, "Store the report under runs/<id>");

  std::string saliency_file, similarity_file;
  std::optional<double> coef;
  auto* props = app.add_subcommand("proposals", "Turn saliency or similarity scores into spans");
  props->add_option("--saliency", saliency_file, "JSON array or {saliency, coef, fps, offset}");
  props->add_option("--similarity", similarity_file, "JSON matrix or {similarity, tau, coef, fps}");
  props->add_option("--coef", coef, "Threshold coefficient");

  std::string input;
  double bin = 5.0;
  auto* stats = app.add_subcommand("stats", "Dataset statistics and histograms");
  stats->add_option("--input", input, "Triplets or benchmark records (JSONL or JSON array)")->required();
  stats->add_option("--bin", bin, "Duration histogram bin width in seconds")->default_val(5.0);

  auto* exp = app.add_subcommand("export", "Write accepted triplets as JSONL");
  exp->add_option("--out", out_file, "Output file (stdout when omitted)");

  std::string instance;
  bool check = false;
  double tol = 1e-4;
  auto* losses = app.add_subcommand("losses", "Saliency, similarity and losses for an instance");
  losses->add_option("--instance", instance, "Grounding instance JSON")->required();
  losses->add_flag("--grad-check", check, "Compare analytic and numeric gradients");
  losses->add_option("--tol", tol, "Relative error tolerance")->default_val(1e-4);

  bool show = false;
  auto* config = app.add_subcommand("config", "Print the documented default config");
  config->add_flag("--show", show, "Print the resolved config as JSON instead");

  std::vector<std::string> argv_store{"mhqa"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      throw validation_error(e.what());
    }

    std::vector<std::string> extra;
    if (!host.empty()) extra.push_back("service.host=" + host);
    if (port != 0) extra.push_back("service.port=" + std::to_string(port));
    const RunConfig cfg = resolve(g, extra);
    const auto log = [&](const std::string& stage, const json& counts) {
      err << stage << ": " << counts.dump() << "\n";
    };

    if (*ingest) {
      const Corpus c = load_corpus(narrations);
      std::set<std::string> videos;
      for (const auto& n : c.narrations) videos.insert(n.video_id);
      if (!out_file.empty()) {
        std::string text;
        for (const auto& n : c.narrations) text += json(n).dump() + "\n";
        write_text(out_file, text);
      }
      print_summary(out, {{"videos", videos.size()}, {"narrations", c.narrations.size()},
                          {"durations", c.durations.size()}}, g.as_json);
    } else if (*segment) {
      std::vector<std::string> warnings;
      const auto clips = build_clips(load_corpus(narrations), read_sidecar(conllu),
                                     cfg.allow_heuristic, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << "\n";
      Store store(cfg.store_path);
      auto summary = stage_segment(store, clips, cfg.clip);
      store.compact();
      print_summary(out, summary, g.as_json);
    } else if (*mine) {
      Store store(cfg.store_path);
      auto summary = stage_mine(store, cfg.mining);
      store.compact();
      print_summary(out, summary, g.as_json);
    } else if (*generate || *filter) {
      Store store(cfg.store_path);
      auto client = make_llm_client(cfg);
      const auto opts = pipeline_options(cfg);
      auto summary = *generate ? stage_generate(store, *client, opts) : stage_filter(store, *client, opts);
      store.compact();
      print_summary(out, summary, g.as_json);
    } else if (*pipeline) {
      Store store(cfg.store_path);
      auto client = make_llm_client(cfg);
      auto opts = pipeline_options(cfg);
      opts.run_id = run_id;
      opts.progress = log;
      const auto run = run_pipeline(load_corpus(narrations), read_sidecar(conllu), *client, store, opts);
      for (const auto& w : run.at("warnings")) err << "warning: " << w.get<std::string>() << "\n";
      print_summary(out, g.as_json ? run : run.at("counts"), g.as_json);
    } else if (*serve) {
      Store store(cfg.store_path);
      service::Router router(store, env_or_empty(cfg.token_env));
      err << "serving " << cfg.store_path << " on " << cfg.host << ":" << cfg.port << "\n";
      service::serve(router, cfg.host, static_cast<int>(cfg.port), cfg.static_dir);
    } else if (*eval) {
      out << eval_command(cfg, pred, gt, judge, similarity, csv, eval_run_id).dump(2) << "\n";
    } else if (*props) {
      out << proposals_command(cfg, saliency_file, similarity_file, coef).dump(2) << "\n";
    } else if (*stats) {
      std::vector<StatsSample> samples;
      for (const auto& r : read_records(input)) samples.push_back(stats_sample_from_json(r));
      out << to_json(compute_stats(samples, bin)).dump(2) << "\n";
    } else if (*exp) {
      Store store(cfg.store_path);
      std::string text;
      for (const auto& r : store.export_accepted()) text += r.dump() + "\n";
      if (out_file.empty()) {
        out << text;
      } else {
        write_text(out_file, text);
        print_summary(out, {{"exported", store.list("triplets", {{"status", "accepted"}}).size()},
                            {"out", out_file}}, g.as_json);
      }
    } else if (*losses) {
      out << losses_command(cfg, instance, check, tol).dump(2) << "\n";
    } else if (*config) {
      if (show) {
        out << cfg.to_json().dump(2) << "\n";
      } else {
        out << RunConfig::default_text();
      }
    }
    return 0;
  } catch (const Error& e) {
    err << json{{"error", e.to_json()}}.dump() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
}

}  // namespace mhqa::cli
