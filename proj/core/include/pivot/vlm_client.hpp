#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "pivot/primitives.hpp"

namespace pivot::prim {

struct VlmEndpointConfig {
  std::string base_url = "http://127.0.0.1:8711";
  int timeout_ms = 5000;
  int max_retries = 2;
  std::string model = "stub-vlm";
  int max_tokens = 256;
  int backoff_base_ms = 50;  // doubles per retry
};

// Wire failure classes, surfaced distinctly per the request contract.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};
class HttpStatusError : public std::runtime_error {
 public:
  HttpStatusError(int status, const std::string& body)
      : std::runtime_error("vlm endpoint returned status " + std::to_string(status)),
        status(status),
        body(body) {}
  int status;
  std::string body;
};

// POSTs /v1/complete with {model, messages, max_tokens}; message content is
// either a string or parts [{type:text,...},{type:image,media_type,width,
// height,data(base64 raw RGB)}]. Response body: {"text": "..."}.
// Retries retryable failures (5xx, transport) with exponential backoff.
std::string query_vlm(const VlmEndpointConfig& config, const PromptRound& round);

// Minimal loopback server used by tests and wire-mode rehearsals. The
// handler sees the raw request body and returns the completion text.
class StubVlmServer {
 public:
  using Handler = std::function<std::string(const std::string& request_body)>;

  explicit StubVlmServer(Handler handler);
  ~StubVlmServer();

  // Binds 127.0.0.1 on an ephemeral port and serves on a background thread.
  void start();
  void stop();
  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  // When > 0, the next N requests answer 500 before the handler runs.
  void fail_next(int n) { fail_next_ = n; }
  int request_count() const { return requests_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Handler handler_;
  int port_ = 0;
  std::atomic<int> fail_next_{0};
  std::atomic<int> requests_{0};
};

}  // namespace pivot::prim
