#include "cspeech/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "json.hpp"

#include "cspeech/common.hpp"

namespace cspeech::corpus {
namespace {

using nlohmann::json;

std::string strip_prefix(std::string_view s, std::string_view prefix) {
  return std::string(starts_with(s, prefix) ? s.substr(prefix.size()) : s);
}

const json& require(const json& rec, const char* field) {
  const auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) throw CorpusError(std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const json& rec, const char* field) {
  const json& v = require(rec, field);
  if (!v.is_string()) throw CorpusError(std::string("field '") + field + "' is not a string");
  return v.get<std::string>();
}

std::int64_t parse_timestamp(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return static_cast<std::int64_t>(v.get<double>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    try {
      const long long t = std::stoll(s, &used);
      if (used == s.size()) return t;
    } catch (const std::exception&) {
    }
  }
  throw CorpusError("field 'created_utc' is not an epoch timestamp");
}

bool is_deleted_body(std::string_view body) {
  const auto t = trim(body);
  return t == "[deleted]" || t == "[removed]";
}

auto time_order(const Corpus& corpus) {
  return [&corpus](const std::string& a, const std::string& b) {
    const Comment& ca = corpus.at(a);
    const Comment& cb = corpus.at(b);
    return std::tie(ca.created_at, ca.id) < std::tie(cb.created_at, cb.id);
  };
}

// Parent inside the corpus and inside the same thread, else nullptr.
const Comment* effective_parent(const Corpus& corpus, const Comment& c) {
  if (!c.parent_id) return nullptr;
  const Comment* p = corpus.find(*c.parent_id);
  if (p == nullptr || p->thread_id != c.thread_id) return nullptr;
  return p;
}

}  // namespace

Comment parse_record(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw CorpusError("record is not an object");

  Comment c;
  c.id = strip_prefix(require_string(rec, "id"), "t1_");
  if (c.id.empty()) throw CorpusError("empty id");
  c.author = require_string(rec, "author");
  c.community = require_string(rec, "subreddit");
  c.created_at = parse_timestamp(require(rec, "created_utc"));
  c.body = require_string(rec, "body");
  if (trim(c.body).empty()) throw CorpusError("empty body");
  const std::string link = require_string(rec, "link_id");
  c.thread_id = strip_prefix(link, "t3_");

  const auto parent = rec.find("parent_id");
  if (parent == rec.end()) throw CorpusError("missing field 'parent_id'");
  if (!parent->is_null()) {
    if (!parent->is_string()) throw CorpusError("field 'parent_id' is not a string");
    const std::string p = parent->get<std::string>();
    if (starts_with(p, "t1_")) {
      c.parent_id = p.substr(3);
    } else if (!starts_with(p, "t3_") && p != link && p != c.thread_id && !p.empty()) {
      c.parent_id = p;
    }
  }
  if (const auto tox = rec.find("toxicity"); tox != rec.end() && !tox->is_null()) {
    if (!tox->is_number()) throw CorpusError("field 'toxicity' is not a number");
    const double t = tox->get<double>();
    if (t < 0.0 || t > 1.0) throw CorpusError("field 'toxicity' outside [0, 1]");
    c.toxicity = t;
  }
  return c;
}

Corpus Corpus::ingest(std::istream& in, const IngestOptions& options, IngestReport* report) {
  Corpus corpus;
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = {};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    // Deleted bodies are dropped before schema validation.
    Comment c;
    try {
      json probe = json::parse(line, nullptr, false);
      if (probe.is_object() && probe.contains("body") && probe["body"].is_string() &&
          is_deleted_body(probe["body"].get<std::string>())) {
        ++rep.deleted;
        continue;
      }
      c = parse_record(line);
    } catch (const CorpusError& e) {
      if (options.strict) throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
      ++rep.rejected;
      rep.issues.push_back({line_no, e.what()});
      continue;
    }
    if (corpus.index_.contains(c.id)) {
      if (options.strict) {
        throw CorpusError("line " + std::to_string(line_no) + ": duplicate id '" + c.id + "'");
      }
      ++rep.duplicates;
      rep.issues.push_back({line_no, "duplicate id '" + c.id + "'"});
      continue;
    }
    corpus.add(std::move(c));
    ++rep.accepted;
  }
  return corpus;
}

Corpus Corpus::ingest_file(const std::string& path, const IngestOptions& options, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus '" + path + "'");
  return ingest(in, options, report);
}

void Corpus::save(std::ostream& out) const {
  for (const auto& c : comments_) {
    json rec;
    rec["id"] = c.id;
    rec["author"] = c.author;
    rec["subreddit"] = c.community;
    rec["created_utc"] = c.created_at;
    rec["body"] = c.body;
    rec["parent_id"] = c.parent_id ? "t1_" + *c.parent_id : "t3_" + c.thread_id;
    rec["link_id"] = "t3_" + c.thread_id;
    if (c.toxicity) rec["toxicity"] = *c.toxicity;
    out << rec.dump() << '\n';
  }
}

void Corpus::save_file(const std::string& path) const {
  std::ostringstream ss;
  save(ss);
  write_file_atomic(path, ss.str());
}

void Corpus::add(Comment c) {
  index_.emplace(c.id, comments_.size());
  comments_.push_back(std::move(c));
}

const Comment* Corpus::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &comments_[it->second];
}

const Comment& Corpus::at(std::string_view id) const {
  const Comment* c = find(id);
  if (c == nullptr) throw CorpusError("unknown comment id '" + std::string(id) + "'");
  return *c;
}

void Corpus::set_toxicity(std::string_view id, double score) {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) throw CorpusError("unknown comment id '" + std::string(id) + "'");
  if (score < 0.0 || score > 1.0) throw CorpusError("toxicity outside [0, 1]");
  comments_[it->second].toxicity = score;
}

bool Corpus::fully_scored() const {
  return std::all_of(comments_.begin(), comments_.end(), [](const Comment& c) { return c.toxicity.has_value(); });
}

std::vector<std::string> Corpus::ancestors(std::string_view id, std::size_t limit) const {
  std::vector<std::string> chain;
  const Comment* c = &at(id);
  // The size bound stops a corrupt cyclic chain.
  while (chain.size() < limit && chain.size() < comments_.size()) {
    const Comment* p = effective_parent(*this, *c);
    if (p == nullptr) break;
    chain.push_back(p->id);
    c = p;
  }
  return chain;
}

std::vector<const Comment*> Corpus::by_author(std::string_view author) const {
  std::vector<const Comment*> out;
  for (const auto& c : comments_) {
    if (c.author == author) out.push_back(&c);
  }
  std::sort(out.begin(), out.end(), [](const Comment* a, const Comment* b) {
    return std::tie(a->created_at, a->id) < std::tie(b->created_at, b->id);
  });
  return out;
}

ThreadSet build_threads(const Corpus& corpus) {
  ThreadSet out;
  std::unordered_map<std::string, std::vector<std::string>> children;
  std::vector<std::string> roots;
  for (const auto& c : corpus.comments()) {
    if (const Comment* p = effective_parent(corpus, c)) {
      children[p->id].push_back(c.id);
    } else {
      roots.push_back(c.id);
      if (c.parent_id) out.orphans.push_back(c.id);
    }
  }
  const auto before = time_order(corpus);
  std::sort(roots.begin(), roots.end(), before);
  std::sort(out.orphans.begin(), out.orphans.end());

  // Kahn's algorithm per component: a parent is always emitted before its
  // children, and among ready comments the earliest goes first.
  auto later = [&before](const std::string& a, const std::string& b) { return before(b, a); };
  std::size_t placed = 0;
  for (const auto& root : roots) {
    Thread t;
    t.id = root;
    std::priority_queue<std::string, std::vector<std::string>, decltype(later)> ready(later);
    ready.push(root);
    while (!ready.empty()) {
      std::string id = ready.top();
      ready.pop();
      if (const auto it = children.find(id); it != children.end()) {
        for (const auto& child : it->second) ready.push(child);
      }
      t.comment_ids.push_back(std::move(id));
    }
    placed += t.comment_ids.size();
    out.threads.push_back(std::move(t));
  }
  if (placed != corpus.size()) {
    // Whatever was not reached from a root hangs off a parent cycle.
    std::unordered_set<std::string> seen;
    for (const auto& t : out.threads) seen.insert(t.comment_ids.begin(), t.comment_ids.end());
    for (const auto& c : corpus.comments()) {
      if (!seen.contains(c.id)) throw CorpusError("cycle in parent links involving comment '" + c.id + "'");
    }
  }
  return out;
}

std::vector<ToxicTarget> select_toxic_targets(const Corpus& corpus, double threshold, std::size_t min_parents,
                                              std::size_t max_chain) {
  if (!corpus.fully_scored()) {
    throw CorpusError("corpus lacks toxicity scores; score it before selecting targets");
  }
  std::vector<ToxicTarget> out;
  for (const auto& c : corpus.comments()) {
    if (*c.toxicity < threshold) continue;
    auto chain = corpus.ancestors(c.id, std::max(min_parents, max_chain));
    if (chain.size() < min_parents) continue;
    if (chain.size() > max_chain) chain.resize(max_chain);
    out.push_back({c.id, std::move(chain), {}});
  }
  return out;
}

UserHistory sample_user_history(const Corpus& corpus, std::string_view author, std::size_t k,
                                std::string_view exclude, std::uint64_t seed) {
  const auto mine = corpus.by_author(author);
  if (mine.empty()) throw CorpusError("unknown author '" + std::string(author) + "'");
  const Comment* target = corpus.find(exclude);
  std::vector<std::string> pool;
  for (const Comment* c : mine) {
    if (c->id == exclude) continue;
    if (target != nullptr && c->created_at >= target->created_at) continue;
    pool.push_back(c->id);
  }
  if (pool.empty()) {
    throw CorpusError("author '" + std::string(author) + "' has no comments before '" + std::string(exclude) + "'");
  }
  UserHistory h;
  h.author = std::string(author);
  h.seed = derive_seed(seed, author, exclude, static_cast<std::uint64_t>(k));
  Rng rng(h.seed);
  const std::size_t take = std::min(k, pool.size());
  partial_shuffle(pool, take, rng);
  pool.resize(take);
  h.comment_ids = std::move(pool);
  return h;
}

std::map<std::string, std::size_t> proportional_allocation(const std::map<std::string, std::size_t>& counts,
                                                           std::size_t n) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0},
                                            [](std::size_t acc, const auto& kv) { return acc + kv.second; });
  if (n > total) {
    throw CorpusError("requested " + std::to_string(n) + " pairs but only " + std::to_string(total) + " available");
  }
  std::map<std::string, std::size_t> out;
  if (total == 0) return out;
  struct Share {
    std::string key;
    std::size_t remainder;  // scaled by total, exact integer arithmetic
    std::size_t position;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  std::size_t pos = 0;
  for (const auto& [key, count] : counts) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(n) * count;
    const auto quota = static_cast<std::size_t>(scaled / total);
    out[key] = quota;
    assigned += quota;
    shares.push_back({key, static_cast<std::size_t>(scaled % total), pos++});
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    return a.remainder != b.remainder ? a.remainder > b.remainder : a.position < b.position;
  });
  for (std::size_t i = 0; assigned < n; ++i) {
    // A share can only exceed its availability if rounding pushes it over.
    if (out[shares[i].key] < counts.at(shares[i].key)) {
      ++out[shares[i].key];
      ++assigned;
    }
  }
  return out;
}

PairExport export_pairs_dataset(const Corpus& corpus, std::size_t n, std::ostream& out, std::uint64_t seed) {
  std::map<std::string, std::vector<const Comment*>> replies;
  for (const auto& c : corpus.comments()) {
    if (effective_parent(corpus, c) != nullptr) replies[c.community].push_back(&c);
  }
  std::map<std::string, std::size_t> counts;
  for (auto& [community, list] : replies) {
    std::sort(list.begin(), list.end(), [](const Comment* a, const Comment* b) { return a->id < b->id; });
    counts[community] = list.size();
  }
  const auto quotas = proportional_allocation(counts, n);

  PairExport summary;
  for (const auto& [community, quota] : quotas) {
    auto list = replies[community];
    Rng rng(derive_seed(seed, community));
    partial_shuffle(list, quota, rng);
    for (std::size_t i = 0; i < quota; ++i) {
      const Comment& reply = *list[i];
      const Comment& parent = corpus.at(*reply.parent_id);
      out << json{{"prompt", parent.body}, {"completion", reply.body}}.dump() << '\n';
    }
    summary.per_community[community] = quota;
    summary.total += quota;
  }
  return summary;
}

PairExport export_pairs_dataset(const Corpus& corpus, std::size_t n, const std::string& path, std::uint64_t seed) {
  std::ostringstream ss;
  const PairExport summary = export_pairs_dataset(corpus, n, ss, seed);
  write_file_atomic(path, ss.str());
  return summary;
}

void save_targets(std::ostream& out, std::span<const ToxicTarget> targets) {
  for (const auto& t : targets) {
    out << json{{"comment_id", t.comment_id}, {"parent_chain", t.parent_chain}, {"author_history", t.author_history}}
               .dump()
        << '\n';
  }
}

std::vector<ToxicTarget> load_targets(std::istream& in) {
  std::vector<ToxicTarget> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      out.push_back({rec.at("comment_id").get<std::string>(), rec.at("parent_chain").get<std::vector<std::string>>(),
                     rec.value("author_history", std::vector<std::string>{})});
    } catch (const json::exception& e) {
      throw CorpusError("targets line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cspeech::corpus
