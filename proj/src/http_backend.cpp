// SPDX-License-Identifier: Apache-2.0
#include <httplib.h>

#include <regex>

#include <fmt/format.h>

#include "clover/backend.hpp"
#include "clover/error.hpp"

namespace clover::gen {

namespace {

bool is_transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ConfigError("live backend requires backend.endpoint");
  if (config_.dialect != "openai-chat") {
    throw ConfigError(fmt::format("unsupported backend dialect '{}' (supported: openai-chat)", config_.dialect));
  }
  if (config_.api_key.empty()) throw ConfigError("live backend requires the CLOVER_API_KEY environment variable");

  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url_re)) {
    throw ConfigError(fmt::format("backend.endpoint is not an http(s) URL: {}", config_.endpoint));
  }
  origin_ = m.str(1);
  path_ = m[2].matched ? m.str(2) : "/";
}

HttpBackend::~HttpBackend() = default;

json HttpBackend::request_body(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) const {
  json body = envelope.to_json();
  body["model"] = config_.model;
  body["max_tokens"] = max_completion_tokens;
  body["temperature"] = config_.temperature;
  return body;
}

BackendReply HttpBackend::send(const PromptEnvelope& envelope, std::int64_t max_completion_tokens) {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);

  const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
  auto res = client.Post(path_, headers, request_body(envelope, max_completion_tokens).dump(), "application/json");
  if (!res) {
    throw BackendError(fmt::format("request to {} failed: {}", config_.endpoint, httplib::to_string(res.error())), 0,
                       true);
  }
  if (res->status != 200) {
    throw BackendError(fmt::format("HTTP {} from {}: {}", res->status, config_.endpoint, res->body.substr(0, 200)),
                       res->status, is_transient_status(res->status));
  }

  try {
    const auto body = json::parse(res->body);
    BackendReply reply;
    reply.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto u = body.find("usage"); u != body.end() && u->is_object()) {
      if (u->contains("prompt_tokens")) reply.prompt_tokens = u->at("prompt_tokens").get<std::int64_t>();
      if (u->contains("completion_tokens")) reply.completion_tokens = u->at("completion_tokens").get<std::int64_t>();
    }
    return reply;
  } catch (const json::exception& e) {
    throw BackendError(fmt::format("malformed completion response: {}", e.what()), res->status, false);
  }
}

}  // namespace clover::gen
