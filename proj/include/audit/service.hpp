#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "audit/error.hpp"
#include "audit/scene.hpp"

namespace audit {

enum class ApiErrorCode { not_found, invalid_request, conflict, internal };

std::string_view to_string(ApiErrorCode code) noexcept;

struct ApiError {
  ApiErrorCode code = ApiErrorCode::internal;
  std::string message;
  std::string field_path;
};

ApiError to_api_error(const Error& error);
int http_status(ApiErrorCode code) noexcept;
json to_json(const ApiError& error);

/// HTTP facade over a store directory. The scene store is loaded once at
/// construction and shared read-only; collections and runs are read from and
/// written to disk on every request.
class Service {
 public:
  /// Throws not_found when the directory holds no ingested store.
  explicit Service(std::filesystem::path store_dir);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds host:port; port 0 picks a free port. Returns the bound port or
  /// throws io on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires a successful bind().
  void listen();
  void stop();
  /// Blocks until every background run has finished.
  void wait_for_runs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; a bare port binds 127.0.0.1.
std::pair<std::string, int> parse_bind_address(const std::string& address);

}  // namespace audit
