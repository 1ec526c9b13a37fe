#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mft/error.hpp"

namespace mft::chat {

inline constexpr const char* kApiKeyEnv = "MFT_API_KEY";

struct Message {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string endpoint;  // base URL or full .../chat/completions URL
  std::string model = "gpt-4";
  std::vector<Message> messages;
  double temperature = 1.0;
  int max_tokens = 1024;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
  std::size_t retries = 0;
  std::vector<std::chrono::milliseconds> backoff;
};

/// {model, messages:[{role, content}], temperature, max_tokens}
nlohmann::json to_wire_json(const ChatRequest& request);
/// Reads choices[0].message.content, finish_reason and usage.
ChatResponse parse_wire_response(const std::string& body);
/// Appends /chat/completions unless the URL already ends with it.
std::string completions_url(const std::string& endpoint);

struct HttpResponse {
  int status = 0;
  std::string body;
};

using Headers = std::map<std::string, std::string>;

class Transport {
 public:
  virtual ~Transport() = default;
  /// Must be safe to call from several threads at once.
  virtual HttpResponse post(const std::string& url, const Headers& headers,
                            const std::string& body) = 0;
};

/// cpp-httplib backed transport (http and https).
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(120))
      : timeout_(timeout) {}
  HttpResponse post(const std::string& url, const Headers& headers, const std::string& body) override;

 private:
  std::chrono::seconds timeout_;
};

/// Replays scripted responses in order and records every request. When the
/// script runs out, the fallback (if set) produces the reply.
class MockTransport : public Transport {
 public:
  struct Recorded {
    std::string url;
    Headers headers;
    std::string body;
  };

  void push(HttpResponse response);
  void push_content(const std::string& content);
  void set_fallback(std::function<HttpResponse(const std::string& body)> fallback);

  HttpResponse post(const std::string& url, const Headers& headers, const std::string& body) override;

  std::vector<Recorded> requests() const;

  /// A well-formed completion body carrying content.
  static std::string completion_body(const std::string& content);

 private:
  mutable std::mutex mutex_;
  std::deque<HttpResponse> script_;
  std::function<HttpResponse(const std::string&)> fallback_;
  std::vector<Recorded> recorded_;
};

struct RetryPolicy {
  std::size_t max_retries = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Real sleep.
Sleeper default_sleeper();

/// Reads the credential from MFT_API_KEY, POSTs the request and retries
/// 429/5xx with exponential backoff. 401/403 and other 4xx fail at once.
ChatResponse chat_complete(const ChatRequest& request, Transport& transport,
                           const RetryPolicy& policy = {}, const Sleeper& sleep = default_sleeper());

struct BatchResult {
  std::optional<ChatResponse> response;
  std::string error;  // set when response is empty
  std::optional<ErrorCode> code;
};

/// Runs requests with at most max_in_flight concurrent calls; output order
/// matches input order. Each request has its own retry state.
std::vector<BatchResult> chat_complete_batch(const std::vector<ChatRequest>& requests,
                                             Transport& transport, std::size_t max_in_flight,
                                             const RetryPolicy& policy = {},
                                             const Sleeper& sleep = default_sleeper());

}  // namespace mft::chat
