#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mhqa {

enum class ErrorKind {
  kValidation,
  kNotFound,
  kConflict,
  kTransport,
  kIntegrity,
  kJudgeFormat,
  kFormat,
};

std::string_view to_string(ErrorKind kind);

// Exit code used by the command line tool for each error class:
// 2 validation, 3 transport, 4 integrity.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const;

 private:
  ErrorKind kind_;
  nlohmann::json details_;
};

inline Error validation_error(const std::string& message,
                              nlohmann::json details = nlohmann::json::object()) {
  return Error(ErrorKind::kValidation, message, std::move(details));
}

}  // namespace mhqa
