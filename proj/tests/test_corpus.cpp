#include <catch_amalgamated.hpp>
#include <numeric>
#include <set>

#include "cspeech/corpus.hpp"
#include "cspeech/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cspeech;
using namespace cspeech::corpus;
using fixture::record;

TEST_CASE("ingest accepts well-formed records and reports bad lines") {
  std::string ok = record("a", "u1", "c", 1, "hello", "", "t") + "\n" + record("b", "u2", "c", 2, "hi", "a", "t") +
                   "\n" + record("c", "u1", "c", 3, "yo", "b", "t") + "\n";
  IngestReport rep;
  const auto corpus = fixture::corpus(ok, &rep);
  CHECK(corpus.size() == 3);
  CHECK(rep.rejected == 0);
  CHECK(corpus.at("b").parent_id == std::optional<std::string>("a"));
  CHECK_FALSE(corpus.at("a").parent_id);

  const std::string bad = ok + R"({"id":"d","author":"u","subreddit":"c","created_utc":4,"parent_id":"t1_c","link_id":"t3_t"})" +
                          "\nnot json\n" + record("e", "u", "c", 5, "[deleted]", "", "t") + "\n";
  const auto partial = fixture::corpus(bad, &rep);
  CHECK(partial.size() == 3);
  CHECK(rep.rejected == 2);
  CHECK(rep.deleted == 1);
  REQUIRE(rep.issues.size() == 2);
  CHECK(rep.issues[0].line == 4);
  CHECK(rep.issues[0].reason.find("body") != std::string::npos);
  CHECK(rep.issues[1].line == 5);
}

TEST_CASE("strict ingest names the first duplicate id") {
  std::string lines;
  std::vector<int> dups{37, 120, 250, 251, 499};
  for (int i = 0; i < 495; ++i) lines += record("id" + std::to_string(i), "u", "c", i, "body", "", "t") + "\n";
  for (int d : dups) lines += record("id" + std::to_string(d % 495), "u", "c", d, "again", "", "t") + "\n";
  IngestReport rep;
  const auto lenient = fixture::corpus(lines, &rep);
  CHECK(lenient.size() == 495);
  CHECK(rep.duplicates == 5);
  try {
    fixture::corpus(lines, nullptr, true);
    FAIL("strict mode accepted duplicates");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).find("id37") != std::string::npos);
  }
}

TEST_CASE("save and reload round-trip") {
  const auto c = fixture::corpus(record("a", "u1", "c", 1, "x \"quoted\"", "", "t", 0.25) + "\n");
  std::ostringstream out;
  c.save(out);
  const auto back = fixture::corpus(out.str());
  CHECK(back.at("a").body == "x \"quoted\"");
  CHECK(back.at("a").toxicity == std::optional<double>(0.25));
}

TEST_CASE("threads follow parent links") {
  const auto chain = fixture::corpus(record("a", "u", "c", 1, "x", "", "t") + "\n" + record("c", "u", "c", 3, "x", "b", "t") +
                                     "\n" + record("b", "u", "c", 2, "x", "a", "t") + "\n");
  const auto ts = build_threads(chain);
  REQUIRE(ts.threads.size() == 1);
  CHECK(ts.threads[0].comment_ids == std::vector<std::string>{"a", "b", "c"});

  const auto two = fixture::corpus(record("a", "u", "c", 1, "x", "", "t1") + "\n" + record("b", "u", "c", 2, "x", "", "t2") + "\n");
  CHECK(build_threads(two).threads.size() == 2);

  const auto orphan = fixture::corpus(record("a", "u", "c", 1, "x", "zz", "t1") + "\n");
  const auto os = build_threads(orphan);
  CHECK(os.threads.size() == 1);
  CHECK(os.orphans == std::vector<std::string>{"a"});

  const auto cyc = fixture::corpus(record("a", "u", "c", 1, "x", "b", "t") + "\n" + record("b", "u", "c", 2, "x", "a", "t") + "\n");
  CHECK_THROWS_AS(build_threads(cyc), CorpusError);
}

TEST_CASE("thread recovery on a 49-thread fixture matches union-find") {
  oracle::Gen g(49);
  std::string lines;
  std::vector<std::string> ids, parents, threads;
  int next = 0;
  for (int t = 0; t < 49; ++t) {
    const std::size_t size = 1 + oracle::pick(g, 8);
    std::vector<std::string> mine;
    for (std::size_t j = 0; j < size; ++j) {
      const std::string id = "k" + std::to_string(next++);
      const std::string parent = j == 0 ? "" : mine[oracle::pick(g, mine.size())];
      lines += record(id, "u", "c", next, "body", parent, "T" + std::to_string(t)) + "\n";
      mine.push_back(id);
      ids.push_back(id);
      parents.push_back(parent);
    }
  }
  // union-find
  std::map<std::string, std::string> up;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    return up[x] == x ? x : up[x] = find(up[x]);
  };
  for (const auto& id : ids) up[id] = id;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!parents[i].empty()) up[find(ids[i])] = find(parents[i]);
  }
  std::set<std::string> roots;
  for (const auto& id : ids) roots.insert(find(id));
  const auto ts = build_threads(fixture::corpus(lines));
  CHECK(roots.size() == 49);
  CHECK(ts.threads.size() == roots.size());
  std::size_t total = 0;
  for (const auto& t : ts.threads) total += t.comment_ids.size();
  CHECK(total == ids.size());
}

TEST_CASE("toxic target selection agrees with a linear scan") {
  std::istringstream in(synthetic::corpus_text({}));
  auto corpus = Corpus::ingest(in, {});
  CHECK_THROWS_AS(select_toxic_targets(corpus, 0.5, 2), CorpusError);
  oracle::Gen g(3);
  for (const auto& c : corpus.comments()) {
    corpus.set_toxicity(c.id, std::uniform_real_distribution<double>(0, 1)(g));
  }
  const auto targets = select_toxic_targets(corpus, 0.5, 2);
  std::vector<std::string> expected;
  for (const auto& c : corpus.comments()) {
    std::size_t depth = 0;
    const Comment* cur = &c;
    while (cur->parent_id && corpus.find(*cur->parent_id)) {
      cur = corpus.find(*cur->parent_id);
      ++depth;
    }
    if (*c.toxicity >= 0.5 && depth >= 2) expected.push_back(c.id);
  }
  std::vector<std::string> got;
  for (const auto& t : targets) {
    got.push_back(t.comment_id);
    CHECK(t.parent_chain.size() == 2);
    CHECK(t.parent_chain[0] == *corpus.at(t.comment_id).parent_id);
  }
  CHECK(got == expected);
  CHECK(select_toxic_targets(corpus, 1.1, 2).empty());
}

TEST_CASE("user history sampling") {
  std::string lines;
  for (int i = 0; i < 31; ++i) lines += record("m" + std::to_string(i), "alice", "c", i, "post", "", "t" + std::to_string(i)) + "\n";
  for (int i = 0; i < 4; ++i) lines += record("b" + std::to_string(i), "bob", "c", i, "post", "", "u" + std::to_string(i)) + "\n";
  lines += record("bx", "bob", "c", 50, "post", "", "u9") + "\n";
  const auto corpus = fixture::corpus(lines);
  const auto h = sample_user_history(corpus, "alice", 20, "m30", 7);
  CHECK(h.comment_ids.size() == 20);
  CHECK(std::set<std::string>(h.comment_ids.begin(), h.comment_ids.end()).size() == 20);
  CHECK(std::find(h.comment_ids.begin(), h.comment_ids.end(), "m30") == h.comment_ids.end());
  CHECK(sample_user_history(corpus, "alice", 20, "m30", 7).comment_ids == h.comment_ids);
  CHECK(sample_user_history(corpus, "bob", 10, "bx", 7).comment_ids.size() == 4);
  CHECK_THROWS_AS(sample_user_history(corpus, "nobody", 3, "bx", 7), CorpusError);
  CHECK_THROWS_AS(sample_user_history(corpus, "alice", 3, "m0", 7), CorpusError);
}

TEST_CASE("proportional allocation") {
  CHECK(proportional_allocation({{"a", 50}, {"b", 50}}, 10) == std::map<std::string, std::size_t>{{"a", 5}, {"b", 5}});
  CHECK_THROWS_AS(proportional_allocation({{"a", 1}}, 2), CorpusError);
  const std::map<std::string, std::size_t> counts{{"c1", 4000}, {"c2", 2500}, {"c3", 1800}, {"c4", 900}, {"c5", 300}};
  const auto alloc = proportional_allocation(counts, 7500);
  std::size_t sum = 0;
  for (const auto& [k, v] : alloc) {
    sum += v;
    const double exact = 7500.0 * static_cast<double>(counts.at(k)) / 9500.0;
    CHECK(std::abs(static_cast<double>(v) - exact) < 1.0);
  }
  CHECK(sum == 7500);
}

TEST_CASE("pair export matches its allocation") {
  std::string lines;
  int id = 0;
  for (const auto& [community, pairs] : std::vector<std::pair<std::string, int>>{{"a", 30}, {"b", 10}}) {
    for (int t = 0; t < pairs; ++t) {
      const std::string root = "r" + std::to_string(id++);
      lines += record(root, "u", community, id, "parent text", "", root) + "\n";
      lines += record("x" + std::to_string(id++), "v", community, id, "reply text", root, root) + "\n";
    }
  }
  const auto corpus = fixture::corpus(lines);
  std::ostringstream out;
  const auto rep = export_pairs_dataset(corpus, 20, out, 1);
  CHECK(rep.total == 20);
  CHECK(rep.per_community.at("a") == 15);
  CHECK(rep.per_community.at("b") == 5);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["prompt"] == "parent text");
    CHECK(j["completion"] == "reply text");
    ++n;
  }
  CHECK(n == 20);
  std::ostringstream again;
  export_pairs_dataset(corpus, 20, again, 1);
  CHECK(again.str() == out.str());
  std::ostringstream sink;
  CHECK_THROWS_AS(export_pairs_dataset(corpus, 41, sink, 1), CorpusError);
}

TEST_CASE("target list round-trip") {
  std::vector<ToxicTarget> t{{"x", {"p", "q"}, {"h1", "h2"}}};
  std::ostringstream out;
  save_targets(out, t);
  std::istringstream in(out.str());
  const auto back = load_targets(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].parent_chain == t[0].parent_chain);
  CHECK(back[0].author_history == t[0].author_history);
}

TEST_CASE("bundled synthetic corpus shape") {
  const auto corpus = Corpus::ingest_file(std::string(CSPEECH_DATA_DIR) + "/synthetic_corpus.jsonl", {true});
  const auto threads = build_threads(corpus);
  CHECK(threads.threads.size() >= 6);
  std::set<std::string> authors;
  for (const auto& c : corpus.comments()) authors.insert(c.author);
  CHECK(authors.size() >= 3);
  std::istringstream regenerated(synthetic::corpus_text({}));
  std::ostringstream a, b;
  corpus.save(a);
  Corpus::ingest(regenerated, {}).save(b);
  CHECK(a.str() == b.str());
}
