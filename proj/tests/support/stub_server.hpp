#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <thread>

namespace audit::test {

struct StubReply {
  int status = 200;
  std::string body;
  int delay_ms = 0;
};

/// Loopback HTTP server answering every POST with the handler's reply.
class StubServer {
 public:
  using Handler = std::function<StubReply(const std::string& request_body)>;

  explicit StubServer(Handler handler);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string endpoint() const;  // http://127.0.0.1:<port>/v1/chat/completions
  int hits() const { return hits_.load(); }
  std::string last_body() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<int> hits_{0};
};

/// Chat-completion envelope carrying `content` and a usage block.
std::string chat_envelope(const std::string& content, int prompt_tokens = 11,
                          int completion_tokens = 7);

}  // namespace audit::test
