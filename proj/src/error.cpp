#include "audit/error.hpp"

namespace audit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::duplicate_key: return "duplicate_key";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::template_error: return "template";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::insufficient_cohort: return "insufficient_cohort";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

namespace {

std::string decorate(const std::string& message, const std::string& path) {
  if (path.empty()) return message;
  return message + " (at " + path + ")";
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::string field_path)
    : std::runtime_error(decorate(message, field_path)),
      kind_(kind),
      message_(message),
      field_path_(std::move(field_path)) {}

IngestError::IngestError(ErrorKind kind, std::size_t line, const std::string& message,
                         std::string field_path)
    : Error(kind, "line " + std::to_string(line) + ": " + message, std::move(field_path)),
      line_(line) {}

}  // namespace audit
