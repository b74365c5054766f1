#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "claimtree/error.hpp"
#include "claimtree/llm.hpp"
#include "claimtree/url.hpp"

namespace claimtree {
namespace {

constexpr const char* kSystemPrompt =
    "You are a careful medical fact-checking assistant. Follow the requested "
    "output format exactly and respond with JSON only.";

bool expects_object(PromptRole role) {
  switch (role) {
    case PromptRole::kGenerate:
    case PromptRole::kSpan:
    case PromptRole::kCurateExtract:
      return false;
    default:
      return true;
  }
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  auto url = split_url(config_.endpoint);
  base_ = url.base;
  path_ = url.path;
}

json HttpBackend::request_body(const PromptRequest& request) const {
  json body{
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"messages",
       json::array({json{{"role", "system"}, {"content", kSystemPrompt}},
                    json{{"role", "user"}, {"content", request.prompt}}})},
  };
  if (expects_object(request.role)) body["response_format"] = json{{"type", "json_object"}};
  if (config_.seed) body["seed"] = *config_.seed;
  return body;
}

std::string HttpBackend::complete_raw(const PromptRequest& request) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    HttpBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
      throw Error(ErrorKind::kTransport,
                  "environment variable " + config_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string body = request_body(request).dump();

  httplib::Client client(base_);
  auto seconds = static_cast<time_t>(config_.timeout_seconds);
  auto micros = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  std::string last_error;
  ErrorKind last_kind = ErrorKind::kTransport;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_kind = result.error() == httplib::Error::Read || result.error() == httplib::Error::Write
                      ? ErrorKind::kTimeout
                      : ErrorKind::kTransport;
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_kind = ErrorKind::kTransport;
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw Error(ErrorKind::kTransport,
                  "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200));
    }
    try {
      auto doc = json::parse(result->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kTransport, std::string("malformed completion payload: ") + e.what());
    }
  }
  throw Error(last_kind, "chat completion failed after " +
                             std::to_string(config_.max_retries + 1) + " attempt(s): " + last_error);
}

}  // namespace claimtree
