#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cspeech::text {

// Lowercase, punctuation-stripped word tokens plus sentence boundaries.
//
// Word characters are ASCII letters and digits plus every byte >= 0x80, so
// UTF-8 letters stay inside words without any locale lookup. Apostrophes
// (' and U+2019) between word characters join the word and are then dropped
// ("don't" -> "dont"). Sentences end at '.', '!' or '?' unless the period sits
// between two word characters (decimals, abbreviations like "e.g").
struct TokenStream {
  std::vector<std::string> tokens;
  // Exclusive token index at which each sentence ends.
  std::vector<std::size_t> sentence_ends;

  std::size_t word_count() const { return tokens.size(); }
  std::size_t sentence_count() const { return sentence_ends.size(); }
  bool empty() const { return tokens.empty(); }
};

TokenStream tokenize(std::string_view text);

// Interns tokens to dense ids so overlap measures run on integers.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view token);
  std::vector<std::uint32_t> encode(const TokenStream& stream);
  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// ---- ROUGE -------------------------------------------------------------------

enum class RougeVariant { R1F, R2F, RLF };

RougeVariant parse_rouge_variant(std::string_view name);
std::string_view to_string(RougeVariant v);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  // Set when either side has no unit to compare (no tokens, or no bigrams
  // for R2). The score is then defined as 0.
  bool degenerate = false;
};

// Length of the longest common subsequence, bit-parallel over `b`
// (O(|a| * ceil(|b| / 64)) word operations).
std::size_t lcs_length(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

RougeScore rouge_score(std::span<const std::uint32_t> candidate, std::span<const std::uint32_t> reference,
                       RougeVariant variant);
RougeScore rouge_score(std::string_view candidate, std::string_view reference, RougeVariant variant);

// F-measure of the chosen variant; 0 for degenerate inputs.
double rouge(std::string_view a, std::string_view b, RougeVariant variant = RougeVariant::RLF);

// ---- readability -------------------------------------------------------------

// Vowel-group syllable heuristic on a normalized token: groups of
// [aeiouy] (y only after the first letter) count one each; a final silent 'e'
// is dropped unless the word ends in consonant + "le"; every word has >= 1.
std::size_t count_syllables(std::string_view token);

struct ReadingEase {
  double raw = 0.0;
  double normalized = 0.0;  // clamp(raw, 0, 100) / 100
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

// Flesch Reading Ease: 206.835 - 1.015 * words/sentences - 84.6 * syllables/words.
// Throws MetricError when the text has no words.
ReadingEase fres(std::string_view text);
double fres_from_counts(std::size_t words, std::size_t sentences, std::size_t syllables);

// ---- stylometry --------------------------------------------------------------

inline constexpr std::size_t kStyleFeatureCount = 28;

// Surface-feature writing-style profile. Feature order is fixed for the whole
// program; see style_feature_names().
struct StyleProfile {
  std::array<double, kStyleFeatureCount> values{};
};

const std::array<std::string_view, kStyleFeatureCount>& style_feature_names();

// Pools the texts by summing counts across them; every feature is a ratio of
// pooled counts, so duplicating the input leaves the profile unchanged. The
// type/token ratio is the token-weighted mean of per-text ratios for the same
// reason. Throws MetricError when the texts hold no words.
StyleProfile style_profile(std::span<const std::string> texts);
StyleProfile style_profile(std::string_view text);

// ---- rank correlation ----------------------------------------------------------

// 1-based ranks, ties get the average of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. nullopt when either side has zero
// rank variance. Throws MetricError on size mismatch or fewer than 2 points.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Kendall tau-b with tie correction, O(n log n) (Knight's merge-sort count).
// nullopt when either side is constant. Throws on size mismatch or n < 2.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Tau-b between two orderings of the same item set (best first).
double kendall_tau(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b);

}  // namespace cspeech::text
