#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "cspeech/corpus.hpp"
#include "json.hpp"

namespace fixture {

// One input record in the ingest layout. `parent` empty: top-level comment.
inline std::string record(const std::string& id, const std::string& author, const std::string& community,
                          std::int64_t t, const std::string& body, const std::string& parent,
                          const std::string& thread, std::optional<double> toxicity = std::nullopt) {
  nlohmann::json j{{"id", id},
                   {"author", author},
                   {"subreddit", community},
                   {"created_utc", t},
                   {"body", body},
                   {"parent_id", parent.empty() ? "t3_" + thread : "t1_" + parent},
                   {"link_id", "t3_" + thread}};
  if (toxicity) j["toxicity"] = *toxicity;
  return j.dump();
}

inline cspeech::corpus::Corpus corpus(const std::string& lines, cspeech::corpus::IngestReport* report = nullptr,
                                      bool strict = false) {
  std::istringstream in(lines);
  return cspeech::corpus::Corpus::ingest(in, {strict}, report);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::random_device rd;
  const auto p = std::filesystem::temp_directory_path() / (name + "-" + std::to_string(rd()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixture
