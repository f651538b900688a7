#include "pivot/vlm_client.hpp"

#include <chrono>
#include <nlohmann/json.hpp>
#include <thread>

#include <httplib.h>

#include "pivot/base64.hpp"

namespace pivot::prim {

using nlohmann::json;

namespace {

json message_to_json(const Message& m) {
  if (!m.has_image) return json{{"role", m.role}, {"content", m.content}};
  json parts = json::array();
  parts.push_back(json{{"type", "text"}, {"text", m.content}});
  parts.push_back(json{{"type", "image"},
                       {"media_type", "image/x-raw-rgb"},
                       {"width", m.image.width},
                       {"height", m.image.height},
                       {"data", base64_encode(m.image.rgb)}});
  return json{{"role", m.role}, {"content", std::move(parts)}};
}

struct ParsedUrl {
  std::string host;
  int port = 80;
};

ParsedUrl parse_base_url(const std::string& url) {
  std::string rest = url;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  ParsedUrl out;
  const auto colon = rest.find(':');
  if (colon == std::string::npos) {
    out.host = rest;
  } else {
    out.host = rest.substr(0, colon);
    out.port = std::stoi(rest.substr(colon + 1));
  }
  if (out.host.empty()) throw std::invalid_argument("vlm client: bad base url '" + url + "'");
  return out;
}

}  // namespace

std::string query_vlm(const VlmEndpointConfig& config, const PromptRound& round) {
  if (config.timeout_ms <= 0) throw std::invalid_argument("vlm client: timeout must be > 0");
  const ParsedUrl url = parse_base_url(config.base_url);

  json messages = json::array();
  for (const auto& m : round.messages) messages.push_back(message_to_json(m));
  const std::string body =
      json{{"model", config.model}, {"messages", std::move(messages)}, {"max_tokens", config.max_tokens}}
          .dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.backoff_base_ms << (attempt - 1)));
    }
    httplib::Client client(url.host, url.port);
    client.set_connection_timeout(0, config.timeout_ms * 1000);
    client.set_read_timeout(0, config.timeout_ms * 1000);
    client.set_write_timeout(0, config.timeout_ms * 1000);

    auto res = client.Post("/v1/complete", body, "application/json");
    if (!res) {
      const auto err = res.error();
      last_error = httplib::to_string(err);
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write) {
        if (attempt == config.max_retries) {
          throw TimeoutError("vlm endpoint timed out: " + last_error);
        }
      } else if (attempt == config.max_retries) {
        throw TransportError("vlm transport failure: " + last_error);
      }
      continue;
    }
    if (res->status >= 500) {
      // Server-side failure: retryable.
      if (attempt == config.max_retries) throw HttpStatusError(res->status, res->body);
      continue;
    }
    if (res->status != 200) throw HttpStatusError(res->status, res->body);

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("text") || !reply["text"].is_string()) {
      throw TransportError("vlm endpoint returned a malformed reply body");
    }
    return reply["text"].get<std::string>();
  }
  throw TransportError("vlm transport failure: " + last_error);
}

// ----------------------------------------------------------- StubVlmServer

struct StubVlmServer::Impl {
  httplib::Server server;
  std::thread thread;
};

StubVlmServer::StubVlmServer(Handler handler)
    : impl_(std::make_unique<Impl>()), handler_(std::move(handler)) {}

StubVlmServer::~StubVlmServer() { stop(); }

void StubVlmServer::start() {
  impl_->server.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    if (fail_next_.load() > 0) {
      --fail_next_;
      res.status = 500;
      res.set_content("{\"error\":\"injected fault\"}", "application/json");
      return;
    }
    const std::string text = handler_(req.body);
    res.status = 200;
    res.set_content(nlohmann::json{{"text", text}}.dump(), "application/json");
  });
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("stub vlm server: bind failed");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void StubVlmServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pivot::prim
