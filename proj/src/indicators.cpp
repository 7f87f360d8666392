#include "cspeech/indicators.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "cspeech/common.hpp"

namespace cspeech::ind {
namespace {

std::optional<double> parse_cell(const std::string& cell) {
  if (cell == "--" || cell.empty()) return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(cell, &used);
  if (used != cell.size()) throw MetricError("bad numeric cell '" + cell + "'");
  return v;
}

std::string render_cell(const std::optional<double>& v) { return v ? format_fixed(*v) : "--"; }

std::size_t config_order(const std::string& label) {
  static const auto order = [] {
    std::unordered_map<std::string, std::size_t> m;
    const auto configs = gen::enumerate_configurations();
    for (std::size_t i = 0; i < configs.size(); ++i) m.emplace(configs[i].label, i);
    return m;
  }();
  const auto it = order.find(label);
  return it == order.end() ? order.size() : it->second;
}

// Pairwise ROUGE over pre-encoded messages.
std::vector<std::vector<std::uint32_t>> encode_all(std::span<const std::string> messages) {
  text::Vocabulary vocab;
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(messages.size());
  for (const auto& m : messages) out.push_back(vocab.encode(text::tokenize(m)));
  return out;
}

}  // namespace

const std::array<Indicator, kIndicatorCount>& all_indicators() {
  static constexpr std::array<Indicator, kIndicatorCount> all{Indicator::Rel, Indicator::Div, Indicator::Read,
                                                              Indicator::Tox, Indicator::Ada, Indicator::Lex,
                                                              Indicator::Wri};
  return all;
}

std::string_view to_string(Indicator i) {
  static constexpr std::array<std::string_view, kIndicatorCount> names{"rel", "div", "read", "tox",
                                                                       "ada", "lex", "wri"};
  return names[static_cast<std::size_t>(i)];
}

std::optional<Indicator> parse_indicator(std::string_view name) {
  for (Indicator i : all_indicators()) {
    if (to_string(i) == name) return i;
  }
  return std::nullopt;
}

bool higher_is_better(Indicator i) { return i != Indicator::Tox; }

const ConfigScores* IndicatorTable::find(std::string_view config) const {
  for (const auto& r : rows) {
    if (r.config == config) return &r;
  }
  return nullptr;
}

std::string message_id(std::string_view config, std::string_view target_id) {
  return std::string(config) + ":" + std::string(target_id);
}

double relevance(std::string_view cs, std::string_view toxic, text::RougeVariant variant) {
  return text::rouge(cs, toxic, variant);
}

std::vector<double> per_message_diversity(std::span<const std::string> messages, text::RougeVariant variant) {
  const std::size_t n = messages.size();
  if (n < 2) throw MetricError("diversity needs at least two messages");
  const auto enc = encode_all(messages);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum += text::rouge_score(enc[i], enc[j], variant).f;
    }
    out[i] = 1.0 - sum / static_cast<double>(n - 1);
  }
  return out;
}

double diversity(std::span<const std::string> messages, text::RougeVariant variant) {
  const std::size_t n = messages.size();
  if (n < 2) throw MetricError("diversity needs at least two messages");
  const auto enc = encode_all(messages);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum += text::rouge_score(enc[i], enc[j], variant).f;
    }
  }
  return 1.0 - sum / static_cast<double>(n * (n - 1));
}

double readability(std::string_view cs) { return text::fres(cs).normalized; }

double adaptation(std::string_view cs, std::string_view baseline_cs, text::RougeVariant variant) {
  return 1.0 - text::rouge(cs, baseline_cs, variant);
}

double personalization_lex(std::string_view cs, std::span<const std::string> user_sample,
                           text::RougeVariant variant) {
  if (user_sample.empty()) throw MetricError("personalization: empty user sample");
  return text::rouge(cs, join(std::vector<std::string>(user_sample.begin(), user_sample.end()), "\n"), variant);
}

std::optional<double> personalization_wri(std::string_view cs, std::span<const std::string> user_sample) {
  if (user_sample.empty()) throw MetricError("personalization: empty user sample");
  const auto a = text::style_profile(cs);
  const auto b = text::style_profile(user_sample);
  return text::spearman(a.values, b.values);
}

StubToxicityScorer::StubToxicityScorer(std::map<std::string, double> lexicon) : lexicon_(std::move(lexicon)) {
  for (const auto& [word, w] : lexicon_) {
    if (w < 0.0 || w > 1.0) throw MetricError("lexicon weight for '" + word + "' outside [0, 1]");
  }
}

double StubToxicityScorer::score(std::string_view text) {
  double best = 0.0;
  for (const auto& t : text::tokenize(text).tokens) {
    if (const auto it = lexicon_.find(t); it != lexicon_.end()) best = std::max(best, it->second);
  }
  return best;
}

std::map<std::string, double> StubToxicityScorer::default_lexicon() {
  return {{"idiot", 0.6},    {"idiots", 0.6},  {"moron", 0.7},   {"morons", 0.7},   {"stupid", 0.55},
          {"dumb", 0.5},     {"trash", 0.5},   {"pathetic", 0.55}, {"loser", 0.6},  {"losers", 0.6},
          {"shut", 0.3},     {"hate", 0.4},    {"clown", 0.5},   {"garbage", 0.5},  {"scum", 0.8},
          {"disgusting", 0.6}, {"imbecile", 0.75}, {"worthless", 0.7}, {"braindead", 0.7}, {"insults", 0.1}};
}

double score_toxicity(std::string_view text, ToxicityScorer& scorer) {
  const double s = scorer.score(text);
  if (!(s >= 0.0 && s <= 1.0)) throw MetricError(scorer.kind() + " scorer returned a value outside [0, 1]");
  return s;
}

void score_corpus(corpus::Corpus& corpus, ToxicityScorer& scorer, std::size_t workers) {
  const auto comments = corpus.comments();
  std::vector<double> scores(comments.size());
  parallel_for(comments.size(), workers, [&](std::size_t i) { scores[i] = score_toxicity(comments[i].body, scorer); });
  std::vector<std::string> ids;
  for (const auto& c : comments) ids.push_back(c.id);
  for (std::size_t i = 0; i < ids.size(); ++i) corpus.set_toxicity(ids[i], scores[i]);
}

IndicatorTable evaluate_sweep(std::span<const gen::GenerationRecord> records, const corpus::Corpus& corpus,
                              std::span<const corpus::ToxicTarget> targets, ToxicityScorer& scorer,
                              const EvaluationOptions& options) {
  std::unordered_map<std::string, const corpus::ToxicTarget*> target_by_id;
  for (const auto& t : targets) target_by_id.emplace(t.comment_id, &t);
  std::unordered_map<std::string, const gen::GenerationRecord*> baseline_by_target;
  std::map<std::string, std::vector<std::size_t>> by_config;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].config == options.baseline) baseline_by_target.emplace(records[i].target_id, &records[i]);
    by_config[records[i].config].push_back(i);
  }
  if (baseline_by_target.empty()) {
    throw MetricError("no records for baseline configuration '" + options.baseline + "'; generate it first");
  }

  std::vector<MessageIndicators> messages(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const auto& r = records[i];
    const auto& toxic = corpus.at(r.target_id);
    const auto t = target_by_id.find(r.target_id);
    if (t == target_by_id.end()) throw MetricError("record for unknown target '" + r.target_id + "'");
    MessageIndicators& m = messages[i];
    m.message_id = message_id(r.config, r.target_id);
    m.config = r.config;
    m.target_id = r.target_id;
    m.v.set(Indicator::Rel, relevance(r.counterspeech, toxic.body, options.variant));
    m.v.set(Indicator::Read, readability(r.counterspeech));
    m.v.set(Indicator::Tox, score_toxicity(r.counterspeech, scorer));
    if (r.config != options.baseline) {
      const auto b = baseline_by_target.find(r.target_id);
      if (b == baseline_by_target.end()) {
        throw MetricError("no baseline counterspeech for target '" + r.target_id + "'");
      }
      m.v.set(Indicator::Ada, adaptation(r.counterspeech, b->second->counterspeech, options.variant));
    }
    std::vector<std::string> sample;
    for (const auto& id : t->second->author_history) sample.push_back(corpus.at(id).body);
    if (!sample.empty()) {
      m.v.set(Indicator::Lex, personalization_lex(r.counterspeech, sample, options.variant));
      m.v.set(Indicator::Wri, personalization_wri(r.counterspeech, sample));
    }
  });

  for (const auto& [config, idx] : by_config) {
    if (idx.size() < 2) continue;
    std::vector<std::string> texts;
    for (std::size_t i : idx) texts.push_back(records[i].counterspeech);
    const auto div = per_message_diversity(texts, options.variant);
    for (std::size_t k = 0; k < idx.size(); ++k) messages[idx[k]].v.set(Indicator::Div, div[k]);
  }

  IndicatorTable table;
  table.rows = aggregate(messages);
  table.messages = std::move(messages);
  return table;
}

std::vector<ConfigScores> aggregate(std::span<const MessageIndicators> messages) {
  std::map<std::string, std::vector<const MessageIndicators*>> by_config;
  for (const auto& m : messages) by_config[m.config].push_back(&m);
  std::vector<ConfigScores> rows;
  for (const auto& [config, list] : by_config) {
    ConfigScores row;
    row.config = config;
    row.n = list.size();
    for (Indicator ind : all_indicators()) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto* m : list) {
        if (const auto v = m->v.get(ind)) {
          sum += *v;
          ++count;
        }
      }
      if (count > 0) row.mean[static_cast<std::size_t>(ind)] = sum / static_cast<double>(count);
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ConfigScores& a, const ConfigScores& b) {
    const auto oa = config_order(a.config);
    const auto ob = config_order(b.config);
    return oa != ob ? oa < ob : a.config < b.config;
  });
  return rows;
}

void write_table_csv(std::ostream& out, std::span<const ConfigScores> rows) {
  std::vector<std::string> header{"config"};
  for (Indicator i : all_indicators()) header.emplace_back(to_string(i));
  header.emplace_back("n");
  write_csv_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.config};
    for (const auto& v : r.mean) cells.push_back(render_cell(v));
    cells.push_back(std::to_string(r.n));
    write_csv_row(out, cells);
  }
}

std::vector<ConfigScores> read_table_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!read_csv_row(in, fields) || fields.size() != kIndicatorCount + 2 || fields[0] != "config") {
    throw MetricError("indicator table: unexpected header");
  }
  std::vector<ConfigScores> rows;
  while (read_csv_row(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != kIndicatorCount + 2) throw MetricError("indicator table: wrong column count");
    ConfigScores r;
    r.config = fields[0];
    for (std::size_t i = 0; i < kIndicatorCount; ++i) r.mean[i] = parse_cell(fields[i + 1]);
    r.n = static_cast<std::size_t>(std::stoull(fields.back()));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_messages_csv(std::ostream& out, std::span<const MessageIndicators> messages) {
  std::vector<std::string> header{"message_id", "config", "target_id"};
  for (Indicator i : all_indicators()) header.emplace_back(to_string(i));
  write_csv_row(out, header);
  for (const auto& m : messages) {
    std::vector<std::string> cells{m.message_id, m.config, m.target_id};
    for (const auto& v : m.v.values) cells.push_back(render_cell(v));
    write_csv_row(out, cells);
  }
}

std::vector<MessageIndicators> read_messages_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!read_csv_row(in, fields) || fields.size() != kIndicatorCount + 3 || fields[0] != "message_id") {
    throw MetricError("message indicators: unexpected header");
  }
  std::vector<MessageIndicators> out;
  while (read_csv_row(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != kIndicatorCount + 3) throw MetricError("message indicators: wrong column count");
    MessageIndicators m;
    m.message_id = fields[0];
    m.config = fields[1];
    m.target_id = fields[2];
    for (std::size_t i = 0; i < kIndicatorCount; ++i) m.v.values[i] = parse_cell(fields[i + 3]);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace cspeech::ind
