#include "mft/chat.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "mft/error.hpp"

namespace mft::chat {

using nlohmann::json;

json to_wire_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", request.model},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

ChatResponse parse_wire_response(const std::string& body) {
  ChatResponse out;
  try {
    const auto j = json::parse(body);
    const auto& choice = j.at("choices").at(0);
    out.content = choice.at("message").at("content").get<std::string>();
    if (choice.contains("finish_reason") && choice.at("finish_reason").is_string()) {
      out.finish_reason = choice.at("finish_reason").get<std::string>();
    }
    if (j.contains("usage") && j.at("usage").is_object()) {
      const auto& u = j.at("usage");
      out.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
      out.completion_tokens = u.value("completion_tokens", std::int64_t{0});
      out.total_tokens = u.value("total_tokens", std::int64_t{0});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("chat response has unexpected shape: ") + e.what());
  }
  if (out.content.empty()) throw Error(ErrorCode::kParse, "chat response has empty content");
  return out;
}

std::string completions_url(const std::string& endpoint) {
  constexpr std::string_view kSuffix = "/chat/completions";
  if (endpoint.ends_with(kSuffix)) return endpoint;
  std::string base = endpoint;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + std::string(kSuffix);
}

HttpResponse HttpTransport::post(const std::string& url, const Headers& headers,
                                 const std::string& body) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "bad endpoint URL '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) {
    if (k != "Content-Type") h.emplace(k, v);
  }
  auto result = client.Post(path, h, body, "application/json");
  if (!result) {
    // Connection-level failures are treated like a 503 so they are retried.
    return {503, "transport error: " + httplib::to_string(result.error())};
  }
  return {result->status, result->body};
}

void MockTransport::push(HttpResponse response) {
  std::lock_guard lock(mutex_);
  script_.push_back(std::move(response));
}

void MockTransport::push_content(const std::string& content) { push({200, completion_body(content)}); }

void MockTransport::set_fallback(std::function<HttpResponse(const std::string&)> fallback) {
  std::lock_guard lock(mutex_);
  fallback_ = std::move(fallback);
}

HttpResponse MockTransport::post(const std::string& url, const Headers& headers, const std::string& body) {
  std::function<HttpResponse(const std::string&)> fallback;
  {
    std::lock_guard lock(mutex_);
    recorded_.push_back({url, headers, body});
    if (!script_.empty()) {
      auto r = std::move(script_.front());
      script_.pop_front();
      return r;
    }
    fallback = fallback_;
  }
  if (fallback) return fallback(body);
  return {500, "mock transport: script exhausted"};
}

std::vector<MockTransport::Recorded> MockTransport::requests() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

std::string MockTransport::completion_body(const std::string& content) {
  return json{{"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", "stop"}}})},
              {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}, {"total_tokens", 0}}}}
      .dump();
}

Sleeper default_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

namespace {

bool retryable(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

ChatResponse chat_complete(const ChatRequest& request, Transport& transport,
                           const RetryPolicy& policy, const Sleeper& sleep) {
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kMissingCredential, std::string("environment variable ") + kApiKeyEnv + " is not set");
  }
  if (request.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "chat: no endpoint configured");

  const auto url = completions_url(request.endpoint);
  const auto body = to_wire_json(request).dump();
  const Headers headers{{"Content-Type", "application/json"},
                        {"Authorization", std::string("Bearer ") + key}};

  std::vector<std::chrono::milliseconds> delays;
  auto delay = policy.initial_backoff;
  for (std::size_t attempt = 0;; ++attempt) {
    const auto resp = transport.post(url, headers, body);
    if (resp.status == 200) {
      auto out = parse_wire_response(resp.body);
      out.retries = attempt;
      out.backoff = std::move(delays);
      return out;
    }
    if (resp.status == 401 || resp.status == 403) {
      throw Error(ErrorCode::kAuth, "chat: HTTP " + std::to_string(resp.status) +
                                        " (missing or invalid credential)");
    }
    if (!retryable(resp.status)) {
      throw Error(ErrorCode::kHttp, "chat: HTTP " + std::to_string(resp.status) + ": " +
                                        resp.body.substr(0, 200));
    }
    if (attempt >= policy.max_retries) {
      throw Error(ErrorCode::kRetryExhausted, "chat: gave up after " + std::to_string(attempt) +
                                                  " retries (last HTTP " + std::to_string(resp.status) + ")");
    }
    delays.push_back(delay);
    sleep(delay);
    const auto next = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy.multiplier));
    delay = std::min(next, policy.max_backoff);
  }
}

std::vector<BatchResult> chat_complete_batch(const std::vector<ChatRequest>& requests,
                                             Transport& transport, std::size_t max_in_flight,
                                             const RetryPolicy& policy, const Sleeper& sleep) {
  std::vector<BatchResult> results(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i].response = chat_complete(requests[i], transport, policy, sleep);
      } catch (const Error& e) {
        results[i].error = e.what();
        results[i].code = e.code();
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(max_in_flight, requests.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace mft::chat
