#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cspeech::synthetic {

// Seeded Reddit-style corpus for offline runs. Threads are reply trees under
// a few communities; authors have their own vocabulary so style profiles
// differ. From the second thread on, some comments at depth >= 2 carry insults
// from the stub toxicity lexicon, written by authors with earlier comments.
struct CorpusOptions {
  std::size_t threads = 8;
  std::size_t authors = 5;
  std::size_t comments_per_thread = 9;
  std::vector<std::string> communities{"science", "gaming", "cooking"};
  double toxic_share = 0.3;
  std::int64_t start_time = 1600000000;
  std::uint64_t seed = 7;
};

// Line-delimited records in the ingest layout.
void write_corpus(std::ostream& out, const CorpusOptions& options);
std::string corpus_text(const CorpusOptions& options);

}  // namespace cspeech::synthetic
