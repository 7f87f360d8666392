#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>

#include "cspeech/chat_endpoint.hpp"
#include "cspeech/indicators.hpp"

namespace cspeech::ind {

struct PerspectiveOptions {
  std::string url = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze";
  std::string api_key_env = "PERSPECTIVE_API_KEY";
  std::string cache_path;  // empty: in-memory cache only
  int max_attempts = 4;
  std::chrono::milliseconds backoff{500};  // doubled after each retryable failure
  std::chrono::milliseconds min_interval{1000};
  std::chrono::seconds timeout{30};
};

// Perspective-style `analyze` client. Scores are cached permanently by text
// hash, in memory and (optionally) in an append-only file.
class PerspectiveScorer : public ToxicityScorer {
 public:
  explicit PerspectiveScorer(PerspectiveOptions options);
  double score(std::string_view text) override;
  std::string kind() const override { return "remote"; }

  std::size_t remote_calls() const;

  static std::string request_body(std::string_view text);
  // Reads attributeScores.TOXICITY.summaryScore.value.
  static double parse_response(const std::string& body);
  static std::string text_key(std::string_view text);

 private:
  double fetch(std::string_view text);

  PerspectiveOptions options_;
  std::string origin_;
  std::string path_;
  gen::RateLimiter limiter_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, double> cache_;
  std::size_t remote_calls_ = 0;
};

}  // namespace cspeech::ind
