#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cspeech/common.hpp"

namespace cspeech::corpus {

// One message of a conversation. `parent_id` is empty for top-level comments.
struct Comment {
  std::string id;
  std::string author;
  std::string community;
  std::int64_t created_at = 0;
  std::string body;
  std::optional<std::string> parent_id;
  std::string thread_id;
  std::optional<double> toxicity;
};

// A conversation: comment ids in topological, time-sorted order.
struct Thread {
  std::string id;  // id of the root comment
  std::vector<std::string> comment_ids;
};

struct ThreadSet {
  std::vector<Thread> threads;
  // Comments whose parent is not in the corpus (or sits in another thread);
  // they root their own thread.
  std::vector<std::string> orphans;
};

struct ToxicTarget {
  std::string comment_id;
  std::vector<std::string> parent_chain;  // nearest ancestor first
  std::vector<std::string> author_history;
};

struct UserHistory {
  std::string author;
  std::vector<std::string> comment_ids;
  std::uint64_t seed = 0;
};

struct IngestOptions {
  // Strict mode turns the first malformed record or duplicate id into an error.
  bool strict = false;
};

struct IngestIssue {
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicates = 0;
  std::size_t deleted = 0;  // "[deleted]" / "[removed]" bodies, dropped
  std::vector<IngestIssue> issues;
};

class Corpus {
 public:
  Corpus() = default;

  // Reads line-delimited records with fields
  // {id, author, subreddit, created_utc, body, parent_id, link_id}; extra
  // fields are ignored except an optional numeric "toxicity".
  static Corpus ingest(std::istream& in, const IngestOptions& options, IngestReport* report = nullptr);
  static Corpus ingest_file(const std::string& path, const IngestOptions& options, IngestReport* report = nullptr);

  // Writes the corpus in the same record layout it was read from.
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  std::span<const Comment> comments() const { return comments_; }
  std::size_t size() const { return comments_.size(); }
  const Comment* find(std::string_view id) const;
  const Comment& at(std::string_view id) const;

  void set_toxicity(std::string_view id, double score);
  bool fully_scored() const;

  // Parent chain of `id` within the corpus, nearest first, at most `limit`.
  std::vector<std::string> ancestors(std::string_view id, std::size_t limit) const;

  // Every comment by `author`, in (created_at, id) order.
  std::vector<const Comment*> by_author(std::string_view author) const;

 private:
  void add(Comment c);

  std::vector<Comment> comments_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parses one input record. Throws CorpusError describing the schema violation.
Comment parse_record(std::string_view line);

// Connected components of the parent-link graph, each topologically ordered
// with (created_at, id) as the tie-break. Throws CorpusError on a cycle.
ThreadSet build_threads(const Corpus& corpus);

// Comments with toxicity >= threshold and at least `min_parents` ancestors,
// each with its nearest `max_chain` ancestors attached. Throws CorpusError if
// any comment is unscored.
std::vector<ToxicTarget> select_toxic_targets(const Corpus& corpus, double threshold, std::size_t min_parents,
                                              std::size_t max_chain = 2);

// Uniform sample without replacement of up to k comments by `author` posted
// before `exclude` (the target), never including it. Deterministic in
// (seed, author, k, corpus).
UserHistory sample_user_history(const Corpus& corpus, std::string_view author, std::size_t k,
                                std::string_view exclude, std::uint64_t seed);

// Largest-remainder apportionment of n over the given counts. Ties in the
// remainder go to the earlier key.
std::map<std::string, std::size_t> proportional_allocation(const std::map<std::string, std::size_t>& counts,
                                                           std::size_t n);

struct PairExport {
  std::map<std::string, std::size_t> per_community;
  std::size_t total = 0;
};

// Stratified sample of n parent -> reply pairs written as
// {"prompt": parent body, "completion": reply body} lines.
PairExport export_pairs_dataset(const Corpus& corpus, std::size_t n, std::ostream& out, std::uint64_t seed);
PairExport export_pairs_dataset(const Corpus& corpus, std::size_t n, const std::string& path, std::uint64_t seed);

// Target list persistence (line-delimited).
void save_targets(std::ostream& out, std::span<const ToxicTarget> targets);
std::vector<ToxicTarget> load_targets(std::istream& in);

}  // namespace cspeech::corpus
