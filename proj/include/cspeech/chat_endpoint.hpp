#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace cspeech::gen {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  int max_tokens = 256;
  std::uint64_t seed = 0;
};

// Chat-completion backend. Implementations must be safe to call concurrently.
class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  // Returns the completion text. Throws EndpointError on transport failure.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Spaces calls at least `min_interval` apart. Thread-safe.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval = std::chrono::milliseconds{0});
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::milliseconds interval_;
  std::chrono::steady_clock::time_point next_;
};

// Offline endpoint: the reply is a pure function of (model, messages, seed),
// assembled from a fixed phrase bank and words borrowed from the last line
// of the prompt so overlap-based indicators have something to measure.
class StubChatEndpoint : public ChatEndpoint {
 public:
  explicit StubChatEndpoint(std::string name = "stub") : name_(std::move(name)) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return name_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::string name_;
  std::atomic<std::size_t> calls_{0};
};

// Wraps a callable; handy for scripting failures in tests.
class FunctionChatEndpoint : public ChatEndpoint {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  FunctionChatEndpoint(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return name_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::string name_;
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpEndpointOptions {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string api_key_env;  // name of the environment variable holding a bearer token
  std::chrono::seconds timeout{60};
  std::chrono::milliseconds min_interval{0};
};

// OpenAI-style chat-completion client:
// POST {model, messages, temperature, max_tokens, seed} and read
// choices[0].message.content.
class HttpChatEndpoint : public ChatEndpoint {
 public:
  HttpChatEndpoint(std::string name, HttpEndpointOptions options);
  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return name_; }

  static std::string request_body(const ChatRequest& request);
  static std::string parse_response(const std::string& body);

 private:
  std::string name_;
  HttpEndpointOptions options_;
  std::string origin_;
  std::string path_;
  RateLimiter limiter_;
};

// Splits "scheme://host[:port]/path" into origin and path. Throws on junk.
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace cspeech::gen
