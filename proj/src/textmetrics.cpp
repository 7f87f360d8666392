#include "cspeech/textmetrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "cspeech/common.hpp"

namespace cspeech::text {
namespace {

bool is_ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Byte length of a multi-byte sequence that acts as a separator (general
// punctuation block U+2000..U+206F, NBSP), 0 otherwise.
std::size_t separator_sequence(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  if (i + 1 < s.size() && b(i) == 0xC2 && b(i + 1) == 0xA0) return 2;
  if (i + 2 < s.size() && b(i) == 0xE2 && (b(i + 1) == 0x80 || b(i + 1) == 0x81)) return 3;
  return 0;
}

// Length of an apostrophe sequence at i (ASCII ' or U+2019), 0 otherwise.
std::size_t apostrophe_at(std::string_view s, std::size_t i) {
  if (s[i] == '\'') return 1;
  if (s.compare(i, 3, "\xE2\x80\x99") == 0) return 3;
  return 0;
}

bool is_word_byte_at(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (is_ascii_alnum(c)) return true;
  return c >= 0x80 && separator_sequence(s, i) == 0;
}

struct Scan {
  std::vector<std::string_view> words;  // raw slices, apostrophes included
  std::vector<std::size_t> sentence_ends;
  std::array<std::size_t, 5> punctuation{};  // . , ! ? ;
};

Scan scan(std::string_view s) {
  Scan out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_word = false;
  auto close_sentence = [&out] {
    const std::size_t last = out.sentence_ends.empty() ? 0 : out.sentence_ends.back();
    if (out.words.size() > last) out.sentence_ends.push_back(out.words.size());
  };
  while (i < n) {
    if (const std::size_t ap = apostrophe_at(s, i); ap > 0) {
      if (in_word && i + ap < n && is_word_byte_at(s, i + ap)) {
        i += ap;
        continue;
      }
      if (in_word) {
        out.words.push_back(s.substr(start, i - start));
        in_word = false;
      }
      i += ap;
      continue;
    }
    if (is_word_byte_at(s, i)) {
      if (!in_word) {
        start = i;
        in_word = true;
      }
      ++i;
      continue;
    }
    if (in_word) {
      out.words.push_back(s.substr(start, i - start));
      in_word = false;
    }
    if (const std::size_t sep = separator_sequence(s, i); sep > 0) {
      i += sep;
      continue;
    }
    const char c = s[i];
    switch (c) {
      case '.': ++out.punctuation[0]; break;
      case ',': ++out.punctuation[1]; break;
      case '!': ++out.punctuation[2]; break;
      case '?': ++out.punctuation[3]; break;
      case ';': ++out.punctuation[4]; break;
      default: break;
    }
    if (c == '!' || c == '?') {
      close_sentence();
    } else if (c == '.') {
      const bool internal = i > 0 && i + 1 < n && is_word_byte_at(s, i - 1) && is_word_byte_at(s, i + 1);
      if (!internal) close_sentence();
    }
    ++i;
  }
  if (in_word) out.words.push_back(s.substr(start, n - start));
  close_sentence();
  return out;
}

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    if (const std::size_t ap = apostrophe_at(raw, i); ap > 0) {
      i += ap;
      continue;
    }
    const char c = raw[i];
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    ++i;
  }
  return out;
}

std::size_t codepoints(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

double f_measure(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

template <typename Key>
std::size_t clipped_overlap(std::vector<Key> a, std::vector<Key> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0, overlap = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++overlap;
      ++i;
      ++j;
    }
  }
  return overlap;
}

std::vector<std::uint64_t> bigrams(std::span<const std::uint32_t> ids) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    out.push_back((static_cast<std::uint64_t>(ids[i]) << 32) | ids[i + 1]);
  }
  return out;
}

RougeScore score_from_counts(std::size_t overlap, std::size_t candidate_units, std::size_t reference_units) {
  RougeScore s;
  if (candidate_units == 0 || reference_units == 0) {
    s.degenerate = true;
    return s;
  }
  s.precision = static_cast<double>(overlap) / static_cast<double>(candidate_units);
  s.recall = static_cast<double>(overlap) / static_cast<double>(reference_units);
  s.f = f_measure(s.precision, s.recall);
  return s;
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",     "about", "above", "after", "again", "against", "all",   "am",    "an",    "and",   "any",
      "are",   "as",    "at",    "be",    "because", "been", "before", "being", "below", "between", "both",
      "but",   "by",    "can",   "could", "did",   "do",      "does",  "doing", "down",  "during", "each",
      "few",   "for",   "from",  "further", "had", "has",     "have",  "having", "he",   "her",   "here",
      "hers",  "herself", "him", "himself", "his", "how",     "i",     "if",    "in",    "into",  "is",
      "it",    "its",   "itself", "just", "me",    "more",    "most",  "my",    "myself", "no",   "nor",
      "not",   "now",   "of",    "off",   "on",    "once",    "only",  "or",    "other", "our",   "ours",
      "ourselves", "out", "over", "own",  "same",  "she",     "should", "so",   "some",  "such",  "than",
      "that",  "the",   "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to",  "too",   "under", "until",   "up",    "very",  "was",   "we",    "were",
      "what",  "when",  "where", "which", "while", "who",     "whom",  "why",   "will",  "with",  "would",
      "you",   "your",  "yours", "yourself", "yourselves"};
  return words;
}

constexpr std::array<std::string_view, 15> kFunctionWords = {"the", "a",   "and", "of",  "to",  "in",  "is",  "that",
                                                             "it",  "you", "i",   "not", "but", "for", "this"};

struct StyleCounts {
  double words = 0, sentences = 0, chars = 0, ttr_weighted = 0;
  std::array<double, 5> punctuation{};
  double uppercase = 0, digit = 0, stop = 0, syllables = 0, contractions = 0;
  std::array<double, kFunctionWords.size()> function_words{};
};

void accumulate(StyleCounts& acc, std::string_view text) {
  const Scan sc = scan(text);
  std::unordered_set<std::string> types;
  std::size_t words = 0;
  for (const auto raw : sc.words) {
    const std::string tok = normalize(raw);
    if (tok.empty()) continue;
    ++words;
    types.insert(tok);
    acc.chars += static_cast<double>(codepoints(tok));
    if (raw.front() >= 'A' && raw.front() <= 'Z') acc.uppercase += 1;
    if (std::any_of(raw.begin(), raw.end(), [](char c) { return c >= '0' && c <= '9'; })) acc.digit += 1;
    if (stopwords().contains(tok)) acc.stop += 1;
    for (std::size_t k = 0; k < kFunctionWords.size(); ++k) {
      if (tok == kFunctionWords[k]) acc.function_words[k] += 1;
    }
    acc.syllables += static_cast<double>(count_syllables(tok));
    bool apostrophe = false;
    for (std::size_t i = 0; i < raw.size() && !apostrophe; ++i) apostrophe = apostrophe_at(raw, i) > 0;
    if (apostrophe) acc.contractions += 1;
  }
  if (words == 0) return;
  acc.words += static_cast<double>(words);
  acc.sentences += static_cast<double>(sc.sentence_ends.size());
  acc.ttr_weighted += static_cast<double>(types.size());  // = ttr * words
  for (std::size_t k = 0; k < 5; ++k) acc.punctuation[k] += static_cast<double>(sc.punctuation[k]);
}

}  // namespace

// ---- tokenization ------------------------------------------------------------

TokenStream tokenize(std::string_view text) {
  const Scan sc = scan(text);
  TokenStream out;
  out.tokens.reserve(sc.words.size());
  std::size_t next_end = 0;
  for (std::size_t w = 0; w < sc.words.size(); ++w) {
    std::string tok = normalize(sc.words[w]);
    if (!tok.empty()) out.tokens.push_back(std::move(tok));
    while (next_end < sc.sentence_ends.size() && sc.sentence_ends[next_end] == w + 1) {
      if (out.sentence_ends.empty() || out.sentence_ends.back() < out.tokens.size()) {
        out.sentence_ends.push_back(out.tokens.size());
      }
      ++next_end;
    }
  }
  return out;
}

std::uint32_t Vocabulary::intern(std::string_view token) {
  auto [it, inserted] = ids_.try_emplace(std::string(token), static_cast<std::uint32_t>(ids_.size()));
  return it->second;
}

std::vector<std::uint32_t> Vocabulary::encode(const TokenStream& stream) {
  std::vector<std::uint32_t> ids;
  ids.reserve(stream.tokens.size());
  for (const auto& t : stream.tokens) ids.push_back(intern(t));
  return ids;
}

// ---- ROUGE -------------------------------------------------------------------

RougeVariant parse_rouge_variant(std::string_view name) {
  if (name == "R1-F" || name == "rouge1") return RougeVariant::R1F;
  if (name == "R2-F" || name == "rouge2") return RougeVariant::R2F;
  if (name == "RL-F" || name == "rougeL") return RougeVariant::RLF;
  throw MetricError("unknown ROUGE variant '" + std::string(name) + "' (expected R1-F, R2-F or RL-F)");
}

std::string_view to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::R1F: return "R1-F";
    case RougeVariant::R2F: return "R2-F";
    case RougeVariant::RLF: return "RL-F";
  }
  return "?";
}

std::size_t lcs_length(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.empty() || b.empty()) return 0;
  const std::size_t m = b.size();
  const std::size_t words = (m + 63) / 64;
  std::unordered_map<std::uint32_t, std::vector<std::uint64_t>> match;
  for (std::size_t j = 0; j < m; ++j) {
    auto& mask = match[b[j]];
    if (mask.empty()) mask.assign(words, 0);
    mask[j / 64] |= std::uint64_t{1} << (j % 64);
  }
  // Zero bits of `v` mark positions of b that extend the current LCS.
  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (const std::uint32_t token : a) {
    const auto it = match.find(token);
    if (it == match.end()) continue;
    const auto& mask = it->second;
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & mask[w];
      const std::uint64_t keep = v[w] & ~mask[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t c1 = sum < v[w] ? 1 : 0;
      const std::uint64_t sum2 = sum + carry;
      const std::uint64_t c2 = sum2 < sum ? 1 : 0;
      carry = c1 | c2;
      v[w] = sum2 | keep;
    }
  }
  std::size_t ones = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t word = v[w];
    if (w + 1 == words && m % 64 != 0) word &= (std::uint64_t{1} << (m % 64)) - 1;
    ones += static_cast<std::size_t>(std::popcount(word));
  }
  return m - ones;
}

RougeScore rouge_score(std::span<const std::uint32_t> candidate, std::span<const std::uint32_t> reference,
                       RougeVariant variant) {
  switch (variant) {
    case RougeVariant::R1F:
      return score_from_counts(
          clipped_overlap(std::vector<std::uint32_t>(candidate.begin(), candidate.end()),
                          std::vector<std::uint32_t>(reference.begin(), reference.end())),
          candidate.size(), reference.size());
    case RougeVariant::R2F: {
      auto cb = bigrams(candidate);
      auto rb = bigrams(reference);
      const std::size_t cn = cb.size(), rn = rb.size();
      return score_from_counts(clipped_overlap(std::move(cb), std::move(rb)), cn, rn);
    }
    case RougeVariant::RLF:
      return score_from_counts(lcs_length(candidate, reference), candidate.size(), reference.size());
  }
  return {};
}

RougeScore rouge_score(std::string_view candidate, std::string_view reference, RougeVariant variant) {
  Vocabulary vocab;
  const auto a = vocab.encode(tokenize(candidate));
  const auto b = vocab.encode(tokenize(reference));
  return rouge_score(a, b, variant);
}

double rouge(std::string_view a, std::string_view b, RougeVariant variant) {
  return rouge_score(a, b, variant).f;
}

// ---- readability -------------------------------------------------------------

std::size_t count_syllables(std::string_view token) {
  auto is_vowel = [&](std::size_t i) {
    const char c = token[i];
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || (c == 'y' && i > 0);
  };
  std::size_t count = 0;
  bool previous_vowel = false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const bool v = is_vowel(i);
    if (v && !previous_vowel) ++count;
    previous_vowel = v;
  }
  const std::size_t n = token.size();
  if (count > 1 && n >= 2 && token[n - 1] == 'e' && !is_vowel(n - 2)) {
    const bool consonant_le = n >= 3 && token[n - 2] == 'l' && !is_vowel(n - 3) &&
                              is_ascii_alnum(static_cast<unsigned char>(token[n - 3]));
    if (!consonant_le) --count;
  }
  return std::max<std::size_t>(count, 1);
}

double fres_from_counts(std::size_t words, std::size_t sentences, std::size_t syllables) {
  return 206.835 - 1.015 * (static_cast<double>(words) / static_cast<double>(sentences)) -
         84.6 * (static_cast<double>(syllables) / static_cast<double>(words));
}

ReadingEase fres(std::string_view text) {
  const TokenStream ts = tokenize(text);
  if (ts.empty()) throw MetricError("readability: text has no words");
  ReadingEase r;
  r.words = ts.word_count();
  r.sentences = std::max<std::size_t>(ts.sentence_count(), 1);
  for (const auto& t : ts.tokens) r.syllables += count_syllables(t);
  r.raw = fres_from_counts(r.words, r.sentences, r.syllables);
  r.normalized = std::clamp(r.raw, 0.0, 100.0) / 100.0;
  return r;
}

// ---- stylometry --------------------------------------------------------------

const std::array<std::string_view, kStyleFeatureCount>& style_feature_names() {
  static const std::array<std::string_view, kStyleFeatureCount> names = {
      "mean_sentence_length", "mean_word_length", "type_token_ratio", "period_rate",    "comma_rate",
      "exclamation_rate",     "question_rate",    "semicolon_rate",   "uppercase_word_rate", "digit_rate",
      "stopword_rate",        "fw_the",           "fw_a",             "fw_and",         "fw_of",
      "fw_to",                "fw_in",            "fw_is",            "fw_that",        "fw_it",
      "fw_you",               "fw_i",             "fw_not",           "fw_but",         "fw_for",
      "fw_this",              "mean_syllables_per_word", "contraction_rate"};
  return names;
}

StyleProfile style_profile(std::span<const std::string> texts) {
  StyleCounts c;
  for (const auto& t : texts) accumulate(c, t);
  if (c.words == 0) throw MetricError("style profile: input has no words");
  StyleProfile p;
  auto& v = p.values;
  std::size_t k = 0;
  v[k++] = c.words / c.sentences;
  v[k++] = c.chars / c.words;
  v[k++] = c.ttr_weighted / c.words;
  for (double punct : c.punctuation) v[k++] = punct / c.words;
  v[k++] = c.uppercase / c.words;
  v[k++] = c.digit / c.words;
  v[k++] = c.stop / c.words;
  for (double fw : c.function_words) v[k++] = fw / c.words;
  v[k++] = c.syllables / c.words;
  v[k++] = c.contractions / c.words;
  return p;
}

StyleProfile style_profile(std::string_view text) {
  const std::string s(text);
  return style_profile(std::span<const std::string>(&s, 1));
}

// ---- rank correlation ----------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw MetricError("spearman: vectors differ in length");
  if (x.size() < 2) throw MetricError("spearman: need at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw MetricError("kendall: vectors differ in length");
  if (x.size() < 2) throw MetricError("kendall: need at least two items");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  auto pairs = [](std::uint64_t t) { return t * (t - 1) / 2; };
  const std::uint64_t n0 = pairs(n);
  std::uint64_t tied_x = 0, tied_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    tied_x += pairs(j - i + 1);
    for (std::size_t k = i; k <= j;) {
      std::size_t l = k;
      while (l + 1 <= j && y[order[l + 1]] == y[order[k]]) ++l;
      tied_xy += pairs(l - k + 1);
      k = l + 1;
    }
    i = j + 1;
  }

  // Discordant pairs = strict inversions of y in (x, y) order.
  std::vector<double> seq(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = y[order[i]];
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (seq[j] < seq[i]) {
          swaps += mid - i;
          buf[k++] = seq[j++];
        } else {
          buf[k++] = seq[i++];
        }
      }
      while (i < mid) buf[k++] = seq[i++];
      while (j < hi) buf[k++] = seq[j++];
    }
    std::swap(seq, buf);
  }
  std::uint64_t tied_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && seq[j + 1] == seq[i]) ++j;
    tied_y += pairs(j - i + 1);
    i = j + 1;
  }
  const double denom = std::sqrt(static_cast<double>(n0 - tied_x) * static_cast<double>(n0 - tied_y));
  if (denom == 0.0) return std::nullopt;
  const double numer = static_cast<double>(n0) - static_cast<double>(tied_x) - static_cast<double>(tied_y) +
                       static_cast<double>(tied_xy) - 2.0 * static_cast<double>(swaps);
  return std::clamp(numer / denom, -1.0, 1.0);
}

double kendall_tau(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b) {
  if (ranking_a.size() != ranking_b.size()) throw MetricError("kendall: rankings differ in size");
  if (ranking_a.size() < 2) throw MetricError("kendall: need at least two items");
  std::unordered_map<std::string, double> pos_b;
  for (std::size_t i = 0; i < ranking_b.size(); ++i) pos_b[ranking_b[i]] = static_cast<double>(i);
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < ranking_a.size(); ++i) {
    const auto it = pos_b.find(ranking_a[i]);
    if (it == pos_b.end()) throw MetricError("kendall: item '" + ranking_a[i] + "' missing from second ranking");
    xa.push_back(static_cast<double>(i));
    xb.push_back(it->second);
  }
  if (pos_b.size() != ranking_b.size()) throw MetricError("kendall: duplicate items in ranking");
  return *kendall_tau_b(xa, xb);
}

}  // namespace cspeech::text
