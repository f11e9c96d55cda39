#include "mhqa/service.hpp"

#include <regex>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "mhqa/error.hpp"

namespace mhqa::service {

using nlohmann::json;

namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kValidation:
    case ErrorKind::kFormat:
    case ErrorKind::kJudgeFormat: return 422;
    case ErrorKind::kTransport: return 502;
    case ErrorKind::kIntegrity: return 500;
  }
  return 500;
}

std::string title_for(int status) {
  switch (status) {
    case 400: return "Bad Request";
    case 401: return "Unauthorized";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 409: return "Conflict";
    case 422: return "Unprocessable Entity";
    case 502: return "Bad Gateway";
    default: return "Internal Server Error";
  }
}

Response from_error(const Error& e) {
  json errors = json::array();
  const auto& d = e.details();
  if (d.contains("field")) {
    errors.push_back({{"field", d["field"]}, {"message", e.what()}});
  }
  if (d.contains("violations")) {
    for (const auto& v : d["violations"]) errors.push_back(v);
  }
  auto r = problem(http_status(e.kind()), std::string(to_string(e.kind())), e.what(), errors);
  if (!d.empty()) r.body["details"] = d;
  return r;
}

std::string query_value(const Query& q, const std::string& key) {
  auto it = q.find(key);
  return it == q.end() ? std::string() : it->second;
}

}  // namespace

Response problem(int status, const std::string& code, const std::string& detail, json errors) {
  return Response{status, json{{"type", "about:blank#" + code},
                               {"title", title_for(status)},
                               {"status", status},
                               {"code", code},
                               {"detail", detail},
                               {"errors", std::move(errors)}}};
}

Router::Router(Store& store, std::string token) : store_(store), token_(std::move(token)) {}

void Router::report_progress(const std::string& stage, const json& counts) {
  std::lock_guard lock(progress_mutex_);
  progress_.push_back({{"stage", stage}, {"counts", counts}});
}

Response Router::handle(const std::string& method, const std::string& path, const Query& query,
                        const std::string& body, const std::string& authorization) {
  if (!token_.empty() && path != "/health" && authorization != "Bearer " + token_) {
    return problem(401, "unauthorized", "missing or wrong bearer token");
  }
  try {
    return route(method, path, query, body);
  } catch (const Error& e) {
    return from_error(e);
  } catch (const json::exception& e) {
    return problem(400, "bad_request", e.what());
  }
}

Response Router::route(const std::string& method, const std::string& path, const Query& query,
                       const std::string& body) {
  static const std::regex kClip("^/clips/([^/]+)$");
  static const std::regex kTriplet("^/triplets/([^/]+)$");
  static const std::regex kDecision("^/triplets/([^/]+)/decision$");
  static const std::regex kRun("^/metrics/run/([^/]+)$");
  std::smatch m;

  if (path == "/health") {
    return Response{200, json{{"status", "ok"}, {"store", store_.root().string()}}};
  }
  if (path == "/status") {
    json counts = json::object();
    for (const auto& c : store_collections()) counts[c] = store_.size(c);
    std::lock_guard lock(progress_mutex_);
    return Response{200, json{{"collections", counts}, {"progress", progress_}}};
  }
  if (path == "/triplets") {
    if (method != "GET") return problem(405, "method_not_allowed", "use GET");
    FieldFilter filter;
    for (const char* key : {"status", "clip_id", "category"}) {
      const auto v = query_value(query, key);
      if (!v.empty()) filter[key] = v;
    }
    if (filter.count("status")) status_from_string(filter["status"]);
    const auto items = store_.list("triplets", filter);
    return Response{200, json{{"count", items.size()}, {"items", items}}};
  }
  if (std::regex_match(path, m, kDecision)) {
    if (method != "POST") return problem(405, "method_not_allowed", "use POST");
    json payload;
    try {
      payload = json::parse(body);
    } catch (const json::parse_error& e) {
      return problem(422, "validation", std::string("body is not JSON: ") + e.what(),
                     json::array({{{"field", ""}, {"message", "invalid JSON"}}}));
    }
    if (payload.is_object() && !payload.contains("triplet_id")) payload["triplet_id"] = m[1].str();
    auto decision = decision_from_json(payload);
    if (decision.triplet_id != m[1].str()) {
      throw validation_error("triplet_id does not match the path", {{"field", "triplet_id"}});
    }
    if (!store_.get("triplets", decision.triplet_id)) {
      throw Error(ErrorKind::kNotFound, "unknown triplet " + decision.triplet_id);
    }
    const Triplet t = store_.apply_review(std::move(decision));
    return Response{200, to_json(t)};
  }
  if (std::regex_match(path, m, kTriplet)) {
    if (method != "GET") return problem(405, "method_not_allowed", "use GET");
    auto t = store_.get("triplets", m[1].str());
    if (!t) throw Error(ErrorKind::kNotFound, "unknown triplet " + m[1].str());
    return Response{200, *t};
  }
  if (std::regex_match(path, m, kClip)) {
    if (method != "GET") return problem(405, "method_not_allowed", "use GET");
    auto c = store_.get("clips", m[1].str());
    if (!c) throw Error(ErrorKind::kNotFound, "unknown clip " + m[1].str());
    return Response{200, *c};
  }
  if (std::regex_match(path, m, kRun)) {
    if (method != "GET") return problem(405, "method_not_allowed", "use GET");
    auto r = store_.get("runs", m[1].str());
    if (!r) throw Error(ErrorKind::kNotFound, "unknown run " + m[1].str());
    return Response{200, *r};
  }
  return problem(404, "not_found", "no route for " + path);
}

void serve(Router& router, const std::string& host, int port, const std::string& static_dir) {
  httplib::Server server;
  if (!static_dir.empty() && !server.set_mount_point("/ui", static_dir)) {
    throw validation_error("static directory does not exist: " + static_dir,
                           {{"field", "service.static_dir"}});
  }
  const auto dispatch = [&router](const httplib::Request& req, httplib::Response& res) {
    Query query(req.params.begin(), req.params.end());
    const auto r = router.handle(req.method, req.path, query, req.body,
                                 req.get_header_value("Authorization"));
    res.status = r.status;
    res.set_content(r.body.dump(), r.status >= 400 ? "application/problem+json"
                                                   : "application/json");
  };
  const std::string any = R"(/(health|status|triplets|clips|metrics)(/.*)?)";
  server.Get(any, dispatch);
  server.Post(any, dispatch);
  if (!server.listen(host, port)) {
    throw Error(ErrorKind::kTransport, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace mhqa::service
