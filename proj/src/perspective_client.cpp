#include "cspeech/perspective_client.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "cspeech/common.hpp"

namespace cspeech::ind {

using nlohmann::json;

PerspectiveScorer::PerspectiveScorer(PerspectiveOptions options)
    : options_(std::move(options)), limiter_(options_.min_interval) {
  std::tie(origin_, path_) = gen::split_url(options_.url);
  if (options_.cache_path.empty()) return;
  std::ifstream in(options_.cache_path);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      cache_[j.at("key").get<std::string>()] = j.at("score").get<double>();
    } catch (const json::exception& e) {
      throw MetricError("malformed toxicity cache '" + options_.cache_path + "': " + e.what());
    }
  }
}

std::string PerspectiveScorer::text_key(std::string_view text) {
  return hex64(fnv1a64(text)) + hex64(fnv1a64(text, 0x84222325cbf29ce4ULL));
}

std::string PerspectiveScorer::request_body(std::string_view text) {
  return json{{"comment", {{"text", std::string(text)}}},
              {"languages", {"en"}},
              {"requestedAttributes", {{"TOXICITY", json::object()}}},
              {"doNotStore", true}}
      .dump();
}

double PerspectiveScorer::parse_response(const std::string& body) {
  try {
    const double v = json::parse(body).at("attributeScores").at("TOXICITY").at("summaryScore").at("value");
    if (!(v >= 0.0 && v <= 1.0)) throw MetricError("toxicity score outside [0, 1]");
    return v;
  } catch (const json::exception& e) {
    throw MetricError(std::string("malformed toxicity response: ") + e.what());
  }
}

std::size_t PerspectiveScorer::remote_calls() const {
  std::lock_guard lock(mutex_);
  return remote_calls_;
}

double PerspectiveScorer::fetch(std::string_view text) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  std::string path = path_;
  if (key != nullptr) path += (path.find('?') == std::string::npos ? "?key=" : "&key=") + std::string(key);

  httplib::Client client(origin_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  auto delay = options_.backoff;
  std::string last = "no attempt made";
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    limiter_.acquire();
    {
      std::lock_guard lock(mutex_);
      ++remote_calls_;
    }
    const auto res = client.Post(path, request_body(text), "application/json");
    if (!res) {
      last = "request failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 200) return parse_response(res->body);
    last = "HTTP " + std::to_string(res->status);
    // Quota and server errors are worth retrying; anything else is not.
    if (res->status != 429 && res->status < 500) break;
  }
  throw MetricError("toxicity service: " + last);
}

double PerspectiveScorer::score(std::string_view text) {
  const std::string key = text_key(text);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double s = fetch(text);
  std::lock_guard lock(mutex_);
  if (cache_.emplace(key, s).second && !options_.cache_path.empty()) {
    std::ofstream out(options_.cache_path, std::ios::app);
    out << json{{"key", key}, {"score", s}}.dump() << '\n';
  }
  return cache_.at(key);
}

}  // namespace cspeech::ind
