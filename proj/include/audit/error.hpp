#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace audit {

enum class ErrorKind {
  parse,
  duplicate_key,
  not_found,
  parameter,
  integrity,
  template_error,
  configuration,
  coverage,
  insufficient_cohort,
  conflict,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every fault raised by the library. `field_path` names the offending
/// input field (JSON-pointer-like, e.g. "objects[2].lane_rel") when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field_path = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field_path() const noexcept { return field_path_; }
  /// The message without the field-path suffix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::string field_path_;
};

/// Ingest failure pinned to a 1-based input line.
class IngestError : public Error {
 public:
  IngestError(ErrorKind kind, std::size_t line, const std::string& message,
              std::string field_path = {});

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace audit
