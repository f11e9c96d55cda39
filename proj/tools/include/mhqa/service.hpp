#pragma once

#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "mhqa/store.hpp"

namespace mhqa::service {

struct Response {
  int status = 200;
  nlohmann::json body;
};

using Query = std::multimap<std::string, std::string>;

/// Routes review and metrics requests against a store. Transport-agnostic so
/// the tests can drive it without sockets.
class Router {
 public:
  /// An empty token disables the bearer check.
  Router(Store& store, std::string token = {});

  Response handle(const std::string& method, const std::string& path, const Query& query,
                  const std::string& body, const std::string& authorization = {});

  /// Progress reported by a pipeline stage; exposed under GET /status.
  void report_progress(const std::string& stage, const nlohmann::json& counts);

 private:
  Response route(const std::string& method, const std::string& path, const Query& query,
                 const std::string& body);

  Store& store_;
  std::string token_;
  std::mutex progress_mutex_;
  nlohmann::json progress_ = nlohmann::json::array();
};

/// Problem document for an error kind: {type, title, status, code, detail, errors}.
Response problem(int status, const std::string& code, const std::string& detail,
                 nlohmann::json errors = nlohmann::json::array());

/// Blocks serving `router` until the process is stopped. Serves files from
/// `static_dir` under / when it is non-empty.
void serve(Router& router, const std::string& host, int port, const std::string& static_dir);

}  // namespace mhqa::service
