#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cspeech/chat_endpoint.hpp"
#include "cspeech/corpus.hpp"
#include "cspeech/generation.hpp"
#include "cspeech/textmetrics.hpp"

namespace cspeech::ind {

enum class Indicator { Rel, Div, Read, Tox, Ada, Lex, Wri };
inline constexpr std::size_t kIndicatorCount = 7;

const std::array<Indicator, kIndicatorCount>& all_indicators();
std::string_view to_string(Indicator i);  // rel div read tox ada lex wri
std::optional<Indicator> parse_indicator(std::string_view name);
bool higher_is_better(Indicator i);  // false only for tox

using Values = std::array<std::optional<double>, kIndicatorCount>;

struct IndicatorVector {
  Values values{};

  std::optional<double> get(Indicator i) const { return values[static_cast<std::size_t>(i)]; }
  void set(Indicator i, std::optional<double> v) { values[static_cast<std::size_t>(i)] = v; }
};

struct MessageIndicators {
  std::string message_id;  // "<config>:<target>"
  std::string config;
  std::string target_id;
  IndicatorVector v;
};

struct ConfigScores {
  std::string config;
  Values mean{};
  std::size_t n = 0;

  std::optional<double> get(Indicator i) const { return mean[static_cast<std::size_t>(i)]; }
};

struct IndicatorTable {
  std::vector<ConfigScores> rows;
  std::vector<MessageIndicators> messages;

  const ConfigScores* find(std::string_view config) const;
};

std::string message_id(std::string_view config, std::string_view target_id);

// ---- single indicators ------------------------------------------------------------

double relevance(std::string_view cs, std::string_view toxic, text::RougeVariant variant = text::RougeVariant::RLF);

// 1 - mean ROUGE over ordered pairs i != j. Throws MetricError when n < 2.
double diversity(std::span<const std::string> messages, text::RougeVariant variant = text::RougeVariant::RLF);

// For each message: 1 - mean ROUGE against every other message of the set.
std::vector<double> per_message_diversity(std::span<const std::string> messages,
                                          text::RougeVariant variant = text::RougeVariant::RLF);

double readability(std::string_view cs);

double adaptation(std::string_view cs, std::string_view baseline_cs,
                  text::RougeVariant variant = text::RougeVariant::RLF);

// ROUGE against the concatenated sample. Throws MetricError on an empty sample.
double personalization_lex(std::string_view cs, std::span<const std::string> user_sample,
                           text::RougeVariant variant = text::RougeVariant::RLF);

// Spearman between style profiles; nullopt when a profile has no rank variance.
std::optional<double> personalization_wri(std::string_view cs, std::span<const std::string> user_sample);

// ---- toxicity ---------------------------------------------------------------------

// Must be safe to call from several threads at once.
class ToxicityScorer {
 public:
  virtual ~ToxicityScorer() = default;
  virtual double score(std::string_view text) = 0;
  virtual std::string kind() const = 0;
};

// Max lexicon weight over the text's lowercase tokens; 0 when nothing matches.
class StubToxicityScorer : public ToxicityScorer {
 public:
  explicit StubToxicityScorer(std::map<std::string, double> lexicon);
  double score(std::string_view text) override;
  std::string kind() const override { return "stub"; }

  static std::map<std::string, double> default_lexicon();

 private:
  std::map<std::string, double> lexicon_;
};

double score_toxicity(std::string_view text, ToxicityScorer& scorer);

// Scores every comment of the corpus (in place).
void score_corpus(corpus::Corpus& corpus, ToxicityScorer& scorer, std::size_t workers);

// ---- sweep evaluation -----------------------------------------------------------

struct EvaluationOptions {
  text::RougeVariant variant = text::RougeVariant::RLF;
  std::string baseline = "Ba";
  std::size_t workers = 1;
};

// Per-message indicators for every record plus per-configuration means.
// Rows follow the canonical configuration order. Throws MetricError if the
// baseline configuration has no records, or a record has no baseline
// counterpart for its target.
IndicatorTable evaluate_sweep(std::span<const gen::GenerationRecord> records, const corpus::Corpus& corpus,
                              std::span<const corpus::ToxicTarget> targets, ToxicityScorer& scorer,
                              const EvaluationOptions& options = {});

// Recomputes per-configuration means from per-message values.
std::vector<ConfigScores> aggregate(std::span<const MessageIndicators> messages);

// config,rel,div,read,tox,ada,lex,wri,n with "--" for absent values.
void write_table_csv(std::ostream& out, std::span<const ConfigScores> rows);
std::vector<ConfigScores> read_table_csv(std::istream& in);

void write_messages_csv(std::ostream& out, std::span<const MessageIndicators> messages);
std::vector<MessageIndicators> read_messages_csv(std::istream& in);

}  // namespace cspeech::ind
