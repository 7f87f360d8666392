#include "cspeech/synthetic.hpp"

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "cspeech/common.hpp"
#include "json.hpp"

namespace cspeech::synthetic {
namespace {

struct Voice {
  std::string name;
  std::vector<std::string> openers;
  std::vector<std::string> adjectives;
  std::string ending;
};

const std::vector<Voice>& voices() {
  static const std::vector<Voice> v{
      {"quietfox", {"Honestly,", "I think", "In my experience,"}, {"interesting", "overrated", "underrated"}, "."},
      {"ByteRanger", {"lol", "ngl", "tbh"}, {"wild", "mid", "goated"}, "!!"},
      {"ProfMarigold",
       {"Empirically speaking,", "Notwithstanding the counterarguments,", "Considering the literature,"},
       {"methodologically questionable", "remarkably consistent", "substantially misunderstood"},
       "."},
      {"saltandpepper", {"Okay so", "Fun fact:", "Hot take:"}, {"delicious", "bland", "comforting"}, "."},
      {"night_owl_42", {"Eh,", "Well,", "Look,"}, {"fine", "pointless", "decent"}, "..."},
      {"river_stone", {"From what I have seen,", "Personally,", "To be fair,"}, {"solid", "shaky", "promising"}, "."},
  };
  return v;
}

const std::map<std::string, std::vector<std::string>>& topics() {
  static const std::map<std::string, std::vector<std::string>> t{
      {"science", {"the new telescope data", "peer review", "the vaccine trial", "climate models", "string theory"}},
      {"gaming", {"the latest patch", "speedrunning", "the ranked ladder", "open world design", "loot boxes"}},
      {"cooking", {"cast iron pans", "sourdough starters", "air fryers", "fresh pasta", "knife sharpening"}},
  };
  return t;
}

const std::array<std::string, 8> kInsults{"idiot", "moron", "clown", "loser", "imbecile", "braindead", "pathetic",
                                          "worthless"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

std::string sentence(const Voice& voice, const std::string& topic, Rng& rng) {
  static const std::vector<std::string> verbs{"is", "seems", "looks", "feels"};
  static const std::vector<std::string> reasons{"because nobody reads the details", "after what happened last week",
                                                "if you compare the numbers", "once you try it yourself",
                                                "given how people talk about it"};
  return pick(voice.openers, rng) + " " + topic + " " + pick(verbs, rng) + " " + pick(voice.adjectives, rng) + " " +
         pick(reasons, rng) + voice.ending;
}

}  // namespace

void write_corpus(std::ostream& out, const CorpusOptions& options) {
  if (options.threads == 0 || options.comments_per_thread < 3 || options.communities.empty()) {
    throw Error("synthetic corpus needs threads, at least 3 comments per thread and a community");
  }
  const auto& all = voices();
  const std::size_t n_authors = std::min(options.authors, all.size());
  if (n_authors < 2) throw Error("synthetic corpus needs at least two authors");
  std::size_t next_id = 1;
  for (std::size_t t = 0; t < options.threads; ++t) {
    Rng rng(derive_seed(options.seed, "thread", static_cast<std::uint64_t>(t)));
    const std::string community = options.communities[t % options.communities.size()];
    const auto& topic_bank = topics().count(community) ? topics().at(community) : topics().at("science");
    const std::string topic = pick(topic_bank, rng);
    const std::string thread_id = "th" + std::to_string(t + 1);
    std::vector<std::string> ids;
    std::vector<std::size_t> depth;
    std::int64_t now = options.start_time + static_cast<std::int64_t>(t) * 7200;
    for (std::size_t j = 0; j < options.comments_per_thread; ++j) {
      // Mostly extend the latest reply; sometimes branch off an earlier one.
      std::optional<std::size_t> parent;
      if (j > 0) parent = uniform_unit(rng) < 0.75 ? j - 1 : uniform_index(rng, j);
      const std::size_t d = parent ? depth[*parent] + 1 : 0;
      const std::size_t author = (t + j * 2 + (j > 0 ? uniform_index(rng, 2) : 0)) % n_authors;
      const Voice& voice = all[author];
      std::string body = sentence(voice, topic, rng);
      if (uniform_unit(rng) < 0.5) body += " " + sentence(voice, pick(topic_bank, rng), rng);
      if (t > 0 && d >= 2 && uniform_unit(rng) < options.toxic_share) {
        const std::string& insult = kInsults[uniform_index(rng, kInsults.size())];
        body = "Only a " + insult + " would say that about " + topic + ". " + body;
      }
      now += 60 + static_cast<std::int64_t>(uniform_index(rng, 600));
      const std::string id = "c" + std::to_string(next_id++);
      nlohmann::json rec{{"id", id},
                         {"author", voice.name},
                         {"subreddit", community},
                         {"created_utc", now},
                         {"body", body},
                         {"parent_id", parent ? "t1_" + ids[*parent] : "t3_" + thread_id},
                         {"link_id", "t3_" + thread_id}};
      out << rec.dump() << '\n';
      ids.push_back(id);
      depth.push_back(d);
    }
  }
}

std::string corpus_text(const CorpusOptions& options) {
  std::ostringstream out;
  write_corpus(out, options);
  return out.str();
}

}  // namespace cspeech::synthetic
