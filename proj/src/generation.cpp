#include "cspeech/generation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cspeech::gen {
namespace {

using nlohmann::json;

constexpr std::string_view kPreamble =
    "You are a moderator of a subreddit and you come across a comment that exhibits hate speech. ";

std::string quoted_list(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += '"';
    out += items[i];
    out += '"';
  }
  return out;
}

std::string instruction(const Configuration& config, const ContextBundle& ctx) {
  std::string s(kPreamble);
  if (config.plan.su) {
    s += "Given the following summary describing the reddit user that made the comment: ";
    s += *ctx.user_summary;
    s += ", generate a brief response that aims to counteract this comment in a respectful manner, using the "
         "user's summary to understand his/her style and personalize your response.";
  } else if (config.plan.hi) {
    s += "Given the following " + std::to_string(ctx.history_messages.size()) +
         " comments from the same reddit user: ";
    s += quoted_list(ctx.history_messages);
    s += ", generate a brief response that aims to counteract this comment in a respectful manner, using these "
         "comments to understand the user's style and personalize your response.";
  } else if (config.plan.pr) {
    s += "Generate a brief response that aims to counteract the comment at the end of this conversation in a "
         "respectful manner.";
  } else {
    s += "Generate a brief response that aims to counteract this comment in a respectful manner.";
  }
  return s;
}

const json& field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw GenerationError(std::string("record lacks field '") + name + "'");
  return *it;
}

RecordStatus parse_status(std::string_view s) {
  if (s == "ok") return RecordStatus::Ok;
  if (s == "empty") return RecordStatus::EmptyCompletion;
  if (s == "failed") return RecordStatus::Failed;
  throw GenerationError("unknown record status '" + std::string(s) + "'");
}

}  // namespace

std::string_view tag(Factor f) {
  static constexpr std::array<std::string_view, kFactorCount> tags{"Ba", "Mu", "Hs", "Re", "Pr", "Hi", "Su"};
  return tags[static_cast<std::size_t>(f)];
}

FactorKind kind_of(Factor f) {
  switch (f) {
    case Factor::Ba:
      return FactorKind::Base;
    case Factor::Mu:
    case Factor::Hs:
    case Factor::Re:
      return FactorKind::Finetune;
    case Factor::Pr:
      return FactorKind::AdaptationContext;
    case Factor::Hi:
    case Factor::Su:
      return FactorKind::PersonalizationContext;
  }
  return FactorKind::Base;
}

std::optional<Factor> parse_factor(std::string_view t) {
  for (Factor f : all_factors()) {
    if (tag(f) == t) return f;
  }
  return std::nullopt;
}

const std::array<Factor, kFactorCount>& all_factors() {
  static constexpr std::array<Factor, kFactorCount> factors{Factor::Ba, Factor::Mu, Factor::Hs, Factor::Re,
                                                            Factor::Pr, Factor::Hi, Factor::Su};
  return factors;
}

bool is_valid(FactorSet set) {
  const bool ba = set & bit(Factor::Ba);
  const bool mu = set & bit(Factor::Mu);
  const bool hs = set & bit(Factor::Hs);
  const bool re = set & bit(Factor::Re);
  const bool hi = set & bit(Factor::Hi);
  const bool su = set & bit(Factor::Su);
  if (set >= (1u << kFactorCount)) return false;
  // Exactly one of: Ba alone, or any non-empty subset of {Mu, Hs}.
  if (ba == (mu || hs)) return false;
  if (re && !mu) return false;
  if (hi && su) return false;
  return true;
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::None:
      return "none";
    case Group::Adaptation:
      return "adaptation";
    case Group::Personalization:
      return "personalization";
    case Group::Both:
      return "both";
  }
  return "none";
}

Group Configuration::group() const {
  const bool adapt = has(Factor::Re) || has(Factor::Pr);
  const bool pers = has(Factor::Hi) || has(Factor::Su);
  if (adapt && pers) return Group::Both;
  if (adapt) return Group::Adaptation;
  if (pers) return Group::Personalization;
  return Group::None;
}

std::string canonical_label(FactorSet set) {
  std::string out;
  for (Factor f : all_factors()) {
    if (set & bit(f)) out += tag(f);
  }
  return out;
}

Configuration make_configuration(FactorSet set) {
  if (!is_valid(set)) throw GenerationError("invalid factor combination '" + canonical_label(set) + "'");
  Configuration c;
  c.factors = set;
  c.label = canonical_label(set);
  c.model_binding = canonical_label(set & (bit(Factor::Ba) | bit(Factor::Mu) | bit(Factor::Hs) | bit(Factor::Re)));
  c.plan = {c.has(Factor::Pr), c.has(Factor::Hi), c.has(Factor::Su)};
  return c;
}

Configuration parse_configuration(std::string_view label) {
  FactorSet set = 0;
  int last = -1;
  std::string_view rest = label;
  while (!rest.empty()) {
    if (rest.size() < 2) throw GenerationError("malformed configuration label '" + std::string(label) + "'");
    const auto f = parse_factor(rest.substr(0, 2));
    if (!f) throw GenerationError("unknown factor in '" + std::string(label) + "'");
    const int idx = static_cast<int>(*f);
    if (idx <= last) throw GenerationError("non-canonical configuration label '" + std::string(label) + "'");
    last = idx;
    set |= bit(*f);
    rest.remove_prefix(2);
  }
  if (set == 0) throw GenerationError("empty configuration label");
  return make_configuration(set);
}

std::vector<Configuration> enumerate_configurations() {
  std::vector<Configuration> out;
  for (FactorSet set = 1; set < (1u << kFactorCount); ++set) {
    if (is_valid(set)) out.push_back(make_configuration(set));
  }
  // Canonical order: compare tag sequences position by position.
  auto key = [](const Configuration& c) {
    std::vector<int> k;
    for (Factor f : all_factors()) {
      if (c.has(f)) k.push_back(static_cast<int>(f));
    }
    return k;
  };
  std::stable_sort(out.begin(), out.end(), [&key](const Configuration& a, const Configuration& b) {
    if (a.group() != b.group()) return a.group() < b.group();
    const auto ka = key(a);
    const auto kb = key(b);
    if (ka.size() != kb.size()) return ka.size() < kb.size();
    return ka < kb;
  });
  return out;
}

std::vector<std::string> model_bindings() {
  std::vector<std::string> out;
  for (const auto& c : enumerate_configurations()) {
    if (std::find(out.begin(), out.end(), c.model_binding) == out.end()) out.push_back(c.model_binding);
  }
  return out;
}

std::string assemble_prompt(const Configuration& config, std::string_view toxic_message, const ContextBundle& ctx) {
  if (trim(toxic_message).empty()) throw GenerationError("empty toxic message");
  if (config.plan.su && (!ctx.user_summary || trim(*ctx.user_summary).empty())) {
    throw GenerationError(config.label + ": plan needs a user summary");
  }
  if (config.plan.hi && ctx.history_messages.empty()) {
    throw GenerationError(config.label + ": plan needs user history");
  }
  if (config.plan.pr && ctx.parent_messages.empty()) {
    throw GenerationError(config.label + ": plan needs parent messages");
  }

  std::string prompt = instruction(config, ctx);
  prompt += "\n\n";
  if (config.plan.pr) {
    prompt += "Conversation:";
    std::size_t i = 0;
    for (const auto& p : ctx.parent_messages) prompt += "\n" + std::to_string(++i) + ". " + p;
    prompt += "\n" + std::to_string(++i) + ". " + std::string(toxic_message);
  } else {
    prompt += "Comment: ";
    prompt += toxic_message;
  }
  return prompt;
}

std::string summary_prompt(std::span<const std::string> history) {
  if (history.empty()) throw GenerationError("cannot summarize an empty history");
  return "Given the following comments written by the same Reddit user: " + quoted_list(history) +
         ", generate a concise and schematic summary describing the user, following this schema: 1) Writing style "
         "and lexicon: Identify and describe the predominant writing style of the user; 2) Interests: Describe the "
         "interests and topics generally covered by the user. Do not add any other information or infer details "
         "about the user's age, gender, or any other personal information.";
}

ContextBundle build_context(const Configuration& config, const corpus::Corpus& corpus,
                            const corpus::ToxicTarget& target, const std::optional<std::string>& user_summary,
                            std::size_t history_size) {
  ContextBundle ctx;
  if (config.plan.pr) {
    for (auto it = target.parent_chain.rbegin(); it != target.parent_chain.rend(); ++it) {
      ctx.parent_messages.push_back(corpus.at(*it).body);
    }
  }
  if (config.plan.hi) {
    const std::size_t n = std::min(history_size, target.author_history.size());
    for (std::size_t i = 0; i < n; ++i) ctx.history_messages.push_back(corpus.at(target.author_history[i]).body);
  }
  if (config.plan.su) ctx.user_summary = user_summary;
  return ctx;
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::Ok:
      return "ok";
    case RecordStatus::EmptyCompletion:
      return "empty";
    case RecordStatus::Failed:
      return "failed";
  }
  return "failed";
}

std::string record_cache_key(std::string_view config, std::string_view target_id, double temperature,
                             int max_tokens, std::uint64_t seed) {
  return std::string(config) + "|" + std::string(target_id) + "|" + format_fixed(temperature, 4) + "|" +
         std::to_string(max_tokens) + "|" + std::to_string(seed);
}

std::string GenerationRecord::cache_key() const {
  return record_cache_key(config, target_id, temperature, max_tokens, seed);
}

std::string to_json_line(const GenerationRecord& r) {
  json j{{"config", r.config},
         {"target_id", r.target_id},
         {"prompt", r.prompt},
         {"counterspeech", r.counterspeech},
         {"model", r.model},
         {"temperature", r.temperature},
         {"max_tokens", r.max_tokens},
         {"seed", r.seed},
         {"timestamp", r.timestamp},
         {"status", to_string(r.status)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

GenerationRecord record_from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    GenerationRecord r;
    r.config = field(j, "config").get<std::string>();
    r.target_id = field(j, "target_id").get<std::string>();
    r.prompt = field(j, "prompt").get<std::string>();
    r.counterspeech = field(j, "counterspeech").get<std::string>();
    r.model = field(j, "model").get<std::string>();
    r.temperature = field(j, "temperature").get<double>();
    r.max_tokens = field(j, "max_tokens").get<int>();
    r.seed = field(j, "seed").get<std::uint64_t>();
    r.timestamp = field(j, "timestamp").get<std::int64_t>();
    r.status = parse_status(j.value("status", std::string("ok")));
    r.error = j.value("error", std::string());
    return r;
  } catch (const json::exception& e) {
    throw GenerationError(std::string("malformed generation record: ") + e.what());
  }
}

RecordStore::RecordStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto r = record_from_json_line(line);
    const auto key = r.cache_key();
    if (by_key_.contains(key)) continue;
    by_key_.emplace(key, records_.size());
    records_.push_back(std::move(r));
  }
}

std::optional<GenerationRecord> RecordStore::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return records_[it->second];
}

void RecordStore::append(const GenerationRecord& record) {
  if (record.status != RecordStatus::Ok) throw GenerationError("refusing to store a flagged record");
  std::lock_guard lock(mutex_);
  const auto key = record.cache_key();
  if (by_key_.contains(key)) return;
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw GenerationError("cannot append to record store '" + path_ + "'");
    const std::string line = to_json_line(record) + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw GenerationError("short write to record store '" + path_ + "'");
  }
  by_key_.emplace(key, records_.size());
  records_.push_back(record);
}

std::vector<GenerationRecord> RecordStore::all() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t RecordStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::vector<GenerationRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GenerationError("cannot open records '" + path + "'");
  std::vector<GenerationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(record_from_json_line(line));
  }
  return out;
}

SummaryCache::SummaryCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      UserSummary s{j.at("author").get<std::string>(), j.at("text").get<std::string>(),
                    j.at("source_ids").get<std::vector<std::string>>(), j.value("model", std::string())};
      entries_[key(s.author, s.source_ids)] = std::move(s);
    } catch (const json::exception& e) {
      throw GenerationError("malformed summary cache '" + path_ + "': " + e.what());
    }
  }
}

std::string SummaryCache::key(std::string_view author, std::span<const std::string> ids) {
  std::string k(author);
  for (const auto& id : ids) {
    k += '\x1f';
    k += id;
  }
  return k;
}

std::optional<UserSummary> SummaryCache::find(std::string_view author, std::span<const std::string> ids) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key(author, ids));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SummaryCache::put(const UserSummary& summary) {
  std::lock_guard lock(mutex_);
  const auto k = key(summary.author, summary.source_ids);
  if (entries_.contains(k)) return;
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw GenerationError("cannot append to summary cache '" + path_ + "'");
    out << json{{"author", summary.author},
                {"text", summary.text},
                {"source_ids", summary.source_ids},
                {"model", summary.model}}
               .dump()
        << '\n';
  }
  entries_.emplace(k, summary);
}

std::vector<UserSummary> SummaryCache::all() const {
  std::lock_guard lock(mutex_);
  std::vector<UserSummary> out;
  for (const auto& [k, v] : entries_) out.push_back(v);
  return out;
}

UserSummary summarize_user(std::string_view author, std::span<const std::pair<std::string, std::string>> history,
                           ChatEndpoint& endpoint, const std::string& model, const GenerationParams& params,
                           SummaryCache& cache) {
  if (history.empty()) throw GenerationError("cannot summarize author '" + std::string(author) + "': no history");
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  for (const auto& [id, body] : history) {
    ids.push_back(id);
    texts.push_back(body);
  }
  if (auto hit = cache.find(author, ids)) return *hit;

  ChatRequest req{model, {{"user", summary_prompt(texts)}}, params.temperature, params.max_tokens,
                  derive_seed(params.seed, "summary", author)};
  std::string last_error = "empty completion";
  for (int attempt = 0; attempt <= params.retries; ++attempt) {
    try {
      std::string text = endpoint.complete(req);
      if (trim(text).empty()) {
        last_error = "empty completion";
        continue;
      }
      UserSummary s{std::string(author), std::string(trim(text)), ids, model};
      cache.put(s);
      return s;
    } catch (const EndpointError& e) {
      last_error = e.what();
    }
  }
  throw GenerationError("summary for author '" + std::string(author) + "' failed: " + last_error);
}

Generator::Generator(std::map<std::string, EndpointBinding> bindings, RecordStore& store, Clock clock,
                     GenerationParams params)
    : bindings_(std::move(bindings)), store_(store), clock_(std::move(clock)), params_(params) {}

GenerationRecord Generator::produce(const Configuration& config, const std::string& target_id,
                                    std::string_view toxic_message, const ContextBundle& ctx, bool& cached) {
  cached = false;
  const auto b = bindings_.find(config.model_binding);
  if (b == bindings_.end() || b->second.endpoint == nullptr) {
    throw GenerationError("no endpoint bound for model '" + config.model_binding + "'");
  }
  GenerationRecord r;
  r.config = config.label;
  r.target_id = target_id;
  r.model = b->second.model;
  r.temperature = params_.temperature;
  r.max_tokens = params_.max_tokens;
  r.seed = derive_seed(params_.seed, config.label, target_id);
  if (auto hit = store_.find(r.cache_key())) {
    cached = true;
    return *hit;
  }
  r.prompt = assemble_prompt(config, toxic_message, ctx);

  ChatRequest req{r.model, {{"user", r.prompt}}, r.temperature, r.max_tokens, r.seed};
  r.status = RecordStatus::Failed;
  for (int attempt = 0; attempt <= params_.retries; ++attempt) {
    try {
      std::string text = b->second.endpoint->complete(req);
      if (trim(text).empty()) {
        r.status = RecordStatus::EmptyCompletion;
        r.error = "empty completion";
        continue;
      }
      r.counterspeech = std::string(trim(text));
      r.status = RecordStatus::Ok;
      r.error.clear();
      break;
    } catch (const EndpointError& e) {
      r.status = RecordStatus::Failed;
      r.error = e.what();
    }
  }
  r.timestamp = clock_();
  return r;
}

GenerationRecord Generator::generate(const Configuration& config, const std::string& target_id,
                                     std::string_view toxic_message, const ContextBundle& ctx) {
  bool cached = false;
  auto r = produce(config, target_id, toxic_message, ctx, cached);
  if (!cached && r.status == RecordStatus::Ok) store_.append(r);
  return r;
}

Generator::SweepResult Generator::sweep(const std::vector<Job>& jobs, std::size_t workers) {
  std::vector<GenerationRecord> produced(jobs.size());
  std::vector<char> cached(jobs.size(), 0);
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    bool hit = false;
    produced[i] = produce(jobs[i].config, jobs[i].target_id, jobs[i].toxic_message, jobs[i].context, hit);
    cached[i] = hit;
  });
  SweepResult out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (produced[i].status != RecordStatus::Ok) {
      out.failures.push_back(std::move(produced[i]));
      continue;
    }
    if (cached[i]) {
      ++out.cache_hits;
    } else {
      store_.append(produced[i]);
    }
    out.records.push_back(std::move(produced[i]));
  }
  return out;
}

}  // namespace cspeech::gen
