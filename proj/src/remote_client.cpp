#include "audit/remote_client.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "audit/error.hpp"
#include "httplib.h"

namespace audit {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  return "image/jpeg";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read attachment " + p.string(), "attachments");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

void set_timeouts(httplib::Client& client, double timeout_s) {
  const auto usec = std::chrono::microseconds(static_cast<std::int64_t>(timeout_s * 1e6));
  client.set_connection_timeout(usec);
  client.set_read_timeout(usec);
  client.set_write_timeout(usec);
}

// Pulls the assistant text and usage out of a chat-completion envelope.
BackendReply read_envelope(const std::string& body) {
  BackendReply reply;
  const json env = json::parse(body, nullptr, false);
  if (env.is_discarded() || !env.is_object()) {
    reply.status = RunStatus::transport_error;
    reply.raw_response = body;
    reply.error = "response envelope is not a JSON object";
    return reply;
  }
  const json* message = nullptr;
  std::string finish_reason;
  if (auto c = env.find("choices"); c != env.end() && c->is_array() && !c->empty()) {
    const json& choice = c->front();
    if (auto m = choice.find("message"); m != choice.end() && m->is_object()) message = &*m;
    if (auto f = choice.find("finish_reason"); f != choice.end() && f->is_string()) {
      finish_reason = f->get<std::string>();
    }
  }
  if (auto u = env.find("usage"); u != env.end() && u->is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = u->value("prompt_tokens", std::int64_t{0});
    usage.completion_tokens = u->value("completion_tokens", std::int64_t{0});
    reply.token_usage = usage;
  }
  if (message == nullptr) {
    reply.status = RunStatus::transport_error;
    reply.raw_response = body;
    reply.error = "response envelope has no choices[0].message";
    return reply;
  }
  if (auto r = message->find("refusal"); r != message->end() && r->is_string()) {
    reply.status = RunStatus::refused;
    reply.raw_response = r->get<std::string>();
    return reply;
  }
  if (finish_reason == "content_filter") {
    reply.status = RunStatus::refused;
    reply.error = "content_filter";
  }
  if (auto content = message->find("content"); content != message->end() && content->is_string()) {
    reply.raw_response = content->get<std::string>();
  } else if (reply.status == RunStatus::ok) {
    reply.status = RunStatus::transport_error;
    reply.raw_response = body;
    reply.error = "message content is not a string";
  }
  return reply;
}

}  // namespace

void check_credentials(const ModelSpec& spec) {
  if (spec.kind == ModelKind::mock_persona || !spec.api_key_env) return;
  const char* value = std::getenv(spec.api_key_env->c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorKind::configuration,
                "model " + spec.model_id + ": credential variable " + *spec.api_key_env +
                    " is not set",
                "api_key_env");
  }
}

json build_chat_request(const RenderedPrompt& prompt, const ModelSpec& spec,
                        const std::filesystem::path& image_root) {
  json content;
  if (spec.kind == ModelKind::remote_multimodal && !prompt.attachments.empty()) {
    content = json::array({{{"type", "text"}, {"text", prompt.text}}});
    for (const auto& ref : prompt.attachments) {
      const std::filesystem::path p = image_root.empty() ? std::filesystem::path(ref)
                                                         : image_root / ref;
      content.push_back({{"type", "image_url"},
                         {"image_url",
                          {{"url", "data:" + mime_type(p) + ";base64," + base64(read_file(p))}}}});
    }
  } else {
    content = prompt.text;
  }
  return {{"model", spec.remote_model.value_or(spec.model_id)},
          {"temperature", 0},
          {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})}};
}

BackendReply remote_chat_call(const RenderedPrompt& prompt, const ModelSpec& spec,
                              const std::filesystem::path& image_root) {
  if (!spec.endpoint) throw Error(ErrorKind::configuration, "no endpoint", "endpoint");
  check_credentials(spec);

  BackendReply reply;
  std::string body;
  try {
    body = build_chat_request(prompt, spec, image_root).dump();
  } catch (const Error& e) {
    reply.status = RunStatus::transport_error;
    reply.attempts = 0;
    reply.error = e.message();
    return reply;
  }

  const Endpoint ep = split_endpoint(*spec.endpoint);
  httplib::Headers headers;
  if (spec.api_key_env) {
    headers.emplace("Authorization", std::string("Bearer ") + std::getenv(spec.api_key_env->c_str()));
  }

  for (int attempt = 1; attempt <= spec.retry.max_attempts; ++attempt) {
    if (int wait = spec.retry.backoff_before(attempt); wait > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(wait));
    }
    reply = BackendReply{};
    reply.attempts = attempt;

    httplib::Client client(ep.origin);
    set_timeouts(client, spec.timeout_s);
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path, headers, body, "application/json");
    const double elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!res) {
      const auto err = res.error();
      const bool slow = elapsed_s >= spec.timeout_s * 0.95;
      if (slow && (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
                   err == httplib::Error::Write)) {
        reply.status = RunStatus::timeout;
        reply.error = "no response within " + std::to_string(spec.timeout_s) + " s";
        return reply;
      }
      reply.status = RunStatus::transport_error;
      reply.error = httplib::to_string(err);
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      BackendReply parsed = read_envelope(res->body);
      parsed.attempts = attempt;
      return parsed;
    }
    reply.status = RunStatus::transport_error;
    reply.raw_response = res->body;
    reply.error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) return reply;
  }
  return reply;
}

}  // namespace audit
