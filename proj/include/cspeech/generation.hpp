#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cspeech/chat_endpoint.hpp"
#include "cspeech/common.hpp"
#include "cspeech/corpus.hpp"

namespace cspeech::gen {

enum class Factor : std::uint8_t { Ba, Mu, Hs, Re, Pr, Hi, Su };
inline constexpr std::size_t kFactorCount = 7;

enum class FactorKind { Base, Finetune, AdaptationContext, PersonalizationContext };

std::string_view tag(Factor f);
FactorKind kind_of(Factor f);
std::optional<Factor> parse_factor(std::string_view tag);
const std::array<Factor, kFactorCount>& all_factors();

using FactorSet = std::uint8_t;  // bit i set <=> Factor(i) present

constexpr FactorSet bit(Factor f) { return static_cast<FactorSet>(1u << static_cast<unsigned>(f)); }

// Base set in {Ba, Mu, Hs, MuHs}; Re requires Mu (and excludes Ba);
// at most one of Hi/Su.
bool is_valid(FactorSet set);

enum class Group { None, Adaptation, Personalization, Both };
std::string_view to_string(Group g);

struct ContextPlan {
  bool pr = false;
  bool hi = false;
  bool su = false;
};

struct Configuration {
  std::string label;          // e.g. "MuRePrHi"
  std::string model_binding;  // e.g. "MuRe": the base/finetune part of the label
  ContextPlan plan;
  FactorSet factors = 0;

  bool has(Factor f) const { return (factors & bit(f)) != 0; }
  Group group() const;
};

// Tags concatenated in canonical order Ba Mu Hs Re Pr Hi Su.
std::string canonical_label(FactorSet set);
// Throws GenerationError for unknown tags, non-canonical order or invalid sets.
Configuration parse_configuration(std::string_view label);
Configuration make_configuration(FactorSet set);

// All valid configurations, grouped none / adaptation / personalization /
// both and in canonical factor order within each group.
std::vector<Configuration> enumerate_configurations();

// The distinct model bindings used by the enumeration: Ba Mu Hs MuHs MuRe MuHsRe.
std::vector<std::string> model_bindings();

// ---- prompts ----------------------------------------------------------------

struct ContextBundle {
  std::vector<std::string> parent_messages;  // oldest first
  std::vector<std::string> history_messages;
  std::optional<std::string> user_summary;
};

// Builds the prompt sent as the single user message. The instruction text is
// picked Su > Hi > Pr > default; with Pr in the plan the parent messages and
// the toxic message follow as a numbered conversation, otherwise the toxic
// message follows alone. Throws GenerationError if the plan needs context the
// bundle lacks.
std::string assemble_prompt(const Configuration& config, std::string_view toxic_message, const ContextBundle& ctx);

std::string summary_prompt(std::span<const std::string> history);

// Populates only what `config.plan` asks for. Parents come from the target's
// chain, history from its first `history_size` sampled comments.
ContextBundle build_context(const Configuration& config, const corpus::Corpus& corpus,
                            const corpus::ToxicTarget& target, const std::optional<std::string>& user_summary,
                            std::size_t history_size = 10);

// ---- records ----------------------------------------------------------------

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 256;
  std::uint64_t seed = 0;  // master seed; each record derives its own
  int retries = 1;
};

enum class RecordStatus { Ok, EmptyCompletion, Failed };
std::string_view to_string(RecordStatus s);

struct GenerationRecord {
  std::string config;
  std::string target_id;
  std::string prompt;
  std::string counterspeech;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 0;
  std::uint64_t seed = 0;
  std::int64_t timestamp = 0;
  RecordStatus status = RecordStatus::Ok;
  std::string error;

  std::string cache_key() const;
};

std::string record_cache_key(std::string_view config, std::string_view target_id, double temperature,
                             int max_tokens, std::uint64_t seed);

std::string to_json_line(const GenerationRecord& r);
GenerationRecord record_from_json_line(std::string_view line);

// Append-only line-delimited store of successful records. Reads are served
// from memory; each append writes one whole line under a lock.
class RecordStore {
 public:
  RecordStore() = default;  // in-memory only
  explicit RecordStore(std::string path);

  std::optional<GenerationRecord> find(const std::string& key) const;
  void append(const GenerationRecord& record);
  std::vector<GenerationRecord> all() const;
  std::size_t size() const;

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::vector<GenerationRecord> records_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

std::vector<GenerationRecord> load_records(const std::string& path);

// ---- user summaries -----------------------------------------------------------

struct UserSummary {
  std::string author;
  std::string text;
  std::vector<std::string> source_ids;
  std::string model;
};

class SummaryCache {
 public:
  SummaryCache() = default;
  explicit SummaryCache(std::string path);

  std::optional<UserSummary> find(std::string_view author, std::span<const std::string> ids) const;
  void put(const UserSummary& summary);
  std::vector<UserSummary> all() const;

 private:
  static std::string key(std::string_view author, std::span<const std::string> ids);

  std::string path_;
  mutable std::mutex mutex_;
  std::map<std::string, UserSummary> entries_;
};

// One endpoint call with the summary prompt, unless cached. `history` holds
// (id, text) pairs. Throws GenerationError on empty history, or after the
// retry policy is exhausted.
UserSummary summarize_user(std::string_view author, std::span<const std::pair<std::string, std::string>> history,
                           ChatEndpoint& endpoint, const std::string& model, const GenerationParams& params,
                           SummaryCache& cache);

// ---- generation ----------------------------------------------------------------

struct EndpointBinding {
  ChatEndpoint* endpoint = nullptr;
  std::string model;
};

class Generator {
 public:
  Generator(std::map<std::string, EndpointBinding> bindings, RecordStore& store, Clock clock,
            GenerationParams params = {});

  // Returns the cached record if one exists for the key, else calls the
  // endpoint (retrying once on empty/failed output). Flagged records are
  // returned but never stored.
  GenerationRecord generate(const Configuration& config, const std::string& target_id,
                            std::string_view toxic_message, const ContextBundle& ctx);

  struct Job {
    Configuration config;
    std::string target_id;
    std::string toxic_message;
    ContextBundle context;
  };
  struct SweepResult {
    std::vector<GenerationRecord> records;  // job order, successes only
    std::vector<GenerationRecord> failures;
    std::size_t cache_hits = 0;
  };
  // Runs jobs on up to `workers` threads; stores successes in job order so the
  // store file does not depend on scheduling.
  SweepResult sweep(const std::vector<Job>& jobs, std::size_t workers);

  const GenerationParams& params() const { return params_; }

 private:
  GenerationRecord produce(const Configuration& config, const std::string& target_id, std::string_view toxic_message,
                           const ContextBundle& ctx, bool& cached);

  std::map<std::string, EndpointBinding> bindings_;
  RecordStore& store_;
  Clock clock_;
  GenerationParams params_;
};

}  // namespace cspeech::gen
