#include "cspeech/chat_endpoint.hpp"

#include <array>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "cspeech/common.hpp"
#include "cspeech/textmetrics.hpp"

namespace cspeech::gen {
namespace {

constexpr std::array kOpeners{
    "I get that you are frustrated,",
    "Hey, I hear you,",
    "Let's take a breath here,",
    "I understand this topic matters to you,",
    "Fair enough that you disagree,",
    "I can tell you feel strongly,",
};
constexpr std::array kMiddles{
    "but name-calling will not convince anyone.",
    "but insults shut the conversation down.",
    "but attacking people makes your point harder to hear.",
    "but there is a real person on the other side of this thread.",
    "but we can argue the idea without going after each other.",
    "but this community works better when we keep it civil.",
};
constexpr std::array kClosers{
    "What is the actual point you want to make?",
    "Could you rephrase that so we can talk about it?",
    "Let's keep it respectful and focus on the facts.",
    "I'd genuinely like to hear your argument without the insults.",
    "Maybe we can find some common ground here.",
    "Thanks for hearing me out.",
};
constexpr std::array kStyles{
    "casual and direct, short sentences, frequent rhetorical questions",
    "informal, sarcastic, heavy use of slang and exclamations",
    "argumentative and detailed, long sentences with many qualifiers",
    "terse, blunt, mostly lowercase with little punctuation",
};
constexpr std::array kInterests{
    "gaming, hardware and online multiplayer communities",
    "politics, current events and economics",
    "sports, fitness and team rivalries",
    "movies, television and internet culture",
};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& bank, Rng& rng) {
  return bank[uniform_index(rng, N)];
}

std::string last_line(const std::string& s) {
  const auto t = trim(s);
  const auto pos = t.rfind('\n');
  std::string line(pos == std::string_view::npos ? t : t.substr(pos + 1));
  if (starts_with(line, "Comment: ")) return line.substr(9);
  const auto dot = line.find(". ");
  if (dot != std::string::npos && dot < 4) return line.substr(dot + 2);
  return line;
}

}  // namespace

RateLimiter::RateLimiter(std::chrono::milliseconds min_interval)
    : interval_(min_interval), next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (interval_.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::string StubChatEndpoint::complete(const ChatRequest& request) {
  ++calls_;
  std::string transcript = request.model;
  for (const auto& m : request.messages) {
    transcript += '\x1f';
    transcript += m.role;
    transcript += '\x1f';
    transcript += m.content;
  }
  Rng rng(derive_seed(request.seed, transcript));
  const std::string prompt = request.messages.empty() ? std::string() : request.messages.back().content;

  if (starts_with(prompt, "Given the following comments written by the same Reddit user")) {
    return std::string("1) Writing style and lexicon: ") + pick(kStyles, rng) + ". 2) Interests: " +
           pick(kInterests, rng) + ".";
  }

  // Echo a few content words from the message being answered.
  const auto tokens = text::tokenize(last_line(prompt)).tokens;
  std::vector<std::string> borrowed;
  for (const auto& t : tokens) {
    if (t.size() > 3) borrowed.push_back(t);
  }
  partial_shuffle(borrowed, std::min<std::size_t>(2, borrowed.size()), rng);
  borrowed.resize(std::min<std::size_t>(2, borrowed.size()));

  std::string reply = pick(kOpeners, rng);
  reply += ' ';
  reply += pick(kMiddles, rng);
  if (!borrowed.empty()) {
    reply += " Saying \"" + join(borrowed, " ") + "\" does not move the discussion forward.";
  }
  reply += ' ';
  reply += pick(kClosers, rng);
  return reply;
}

std::string FunctionChatEndpoint::complete(const ChatRequest& request) {
  ++calls_;
  return fn_(request);
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw EndpointError("endpoint URL lacks a scheme: '" + url + "'");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw EndpointError("unsupported URL scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpChatEndpoint::HttpChatEndpoint(std::string name, HttpEndpointOptions options)
    : name_(std::move(name)), options_(std::move(options)), limiter_(options_.min_interval) {
  std::tie(origin_, path_) = split_url(options_.url);
}

std::string HttpChatEndpoint::request_body(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  const nlohmann::json body{{"model", request.model},
                            {"messages", messages},
                            {"temperature", request.temperature},
                            {"max_tokens", request.max_tokens},
                            {"seed", request.seed}};
  return body.dump();
}

std::string HttpChatEndpoint::parse_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw EndpointError(std::string("malformed chat-completion response: ") + e.what());
  }
}

std::string HttpChatEndpoint::complete(const ChatRequest& request) {
  limiter_.acquire();
  httplib::Client client(origin_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const auto res = client.Post(path_, headers, request_body(request), "application/json");
  if (!res) throw EndpointError(name_ + ": request failed (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200) {
    throw EndpointError(name_ + ": HTTP " + std::to_string(res->status));
  }
  return parse_response(res->body);
}

}  // namespace cspeech::gen
