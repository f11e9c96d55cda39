#include "mhqa/error.hpp"

namespace mhqa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return "validation";
    case ErrorKind::kNotFound:
      return "not_found";
    case ErrorKind::kConflict:
      return "conflict";
    case ErrorKind::kTransport:
      return "transport";
    case ErrorKind::kIntegrity:
      return "integrity";
    case ErrorKind::kJudgeFormat:
      return "judge_format";
    case ErrorKind::kFormat:
      return "format";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kTransport:
      return 3;
    case ErrorKind::kIntegrity:
      return 4;
    default:
      return 2;
  }
}

nlohmann::json Error::to_json() const {
  nlohmann::json j;
  j["code"] = std::string(to_string(kind_));
  j["message"] = what();
  if (!details_.empty()) j["details"] = details_;
  return j;
}

}  // namespace mhqa
