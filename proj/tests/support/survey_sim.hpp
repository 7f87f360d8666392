#pragma once

// Item banks, a hand-driven clock and scripted participants for the survey
// tests and the acceptance run.

#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cspeech/survey.hpp"
#include "httplib.h"
#include "json.hpp"

namespace sim {

using namespace cspeech::survey;

inline ItemBank make_bank(const std::vector<std::string>& configs, std::size_t per_config) {
  ItemBank bank;
  for (const auto& c : configs) {
    for (std::size_t i = 0; i < per_config; ++i) {
      const std::string id = c + "-" + std::to_string(i);
      bank.add({id, "toxic message " + id, "counterspeech for " + id, c,
                {"community" + std::to_string(i), "previous message " + id, "summary of the author " + id}});
    }
  }
  return bank;
}

inline SurveyConfig make_config(const std::vector<std::string>& configs, std::uint64_t seed) {
  SurveyConfig c;
  c.configs = configs;
  c.controls = SurveyConfig::default_controls();
  c.seed = seed;
  return c;
}

struct ManualClock {
  std::shared_ptr<std::atomic<std::int64_t>> now = std::make_shared<std::atomic<std::int64_t>>(1'700'000'000);

  cspeech::Clock clock() const {
    auto t = now;
    return [t] { return t->load(); };
  }
  void advance(std::int64_t s) const { *now += s; }
};

inline std::map<std::string, std::string> demographics(const std::string& social = "Often (daily)") {
  return {{"age", "34"},
          {"gender", "Female"},
          {"education", "Some college"},
          {"ethnicity", "Other"},
          {"political_affiliation", "Lean Democratic"},
          {"social_media_frequency", social},
          {"social_media_count", "2-3"}};
}

enum class Plant { None, TooFast, ControlFail, StraightLine };

inline int honest(const std::string& item_id, const std::string& question) {
  return 1 + static_cast<int>(std::hash<std::string>{}(item_id + question) % 5);
}

// Drives a participant through the service directly, advancing `clock`
// by `seconds_per_item` before each rating.
inline std::string complete_session(SurveyService& svc, const ManualClock& clock, const std::string& participant,
                                    Plant plant, const std::map<std::string, std::string>& demo = demographics(),
                                    std::int64_t seconds_per_item = 40) {
  const auto s = svc.create_session(participant, true);
  const auto keys = question_keys(s.condition);
  for (;;) {
    const auto next = svc.next_item(s.id);
    if (next.done) break;
    const auto current = svc.session(s.id);
    const auto& slot = current.slots[next.position];
    std::map<std::string, int> answers;
    for (const auto& k : keys) {
      int v = slot.control ? slot.expected : honest(slot.item_id, k);
      if (plant == Plant::ControlFail && slot.control) v = slot.expected == 5 ? 1 : 5;
      if (plant == Plant::StraightLine) v = slot.control ? slot.expected : 3;
      answers[k] = v;
    }
    clock.advance(plant == Plant::TooFast ? 5 : seconds_per_item);
    svc.record_rating(s.id, next.item->item_id, answers);
  }
  return svc.submit_demographics(s.id, demo);
}

// Same walk over HTTP. The config never reaches the client, so `answer`
// gets the item id.
struct HttpParticipant {
  httplib::Client& client;
  const ManualClock& clock;

  nlohmann::json post(const std::string& path, const nlohmann::json& body, int expect) {
    const auto r = client.Post(path, body.dump(), "application/json");
    if (!r || r->status != expect) {
      throw std::runtime_error("POST " + path + " -> " + (r ? std::to_string(r->status) + " " + r->body : "no response"));
    }
    return nlohmann::json::parse(r->body);
  }

  nlohmann::json get(const std::string& path) {
    const auto r = client.Get(path);
    if (!r || r->status != 200) {
      throw std::runtime_error("GET " + path + " -> " + (r ? std::to_string(r->status) + " " + r->body : "no response"));
    }
    return nlohmann::json::parse(r->body);
  }

  // Returns {session id, condition, completion code}.
  std::array<std::string, 3> run(const std::string& participant,
                                 const std::function<int(const std::string& item_id, const std::string& q, bool control)>& answer,
                                 std::int64_t seconds_per_item, const std::map<std::string, std::string>& demo) {
    const auto s = post("/sessions", {{"participant_id", participant}, {"consent", true}}, 201);
    const std::string id = s["session_id"];
    for (;;) {
      const auto next = get("/sessions/" + id + "/next");
      if (next["done"].get<bool>()) break;
      const auto& item = next["item"];
      const bool control = item["item_id"].get<std::string>().rfind("control-", 0) == 0;
      nlohmann::json answers = nlohmann::json::object();
      for (const auto& q : next["questions"]) {
        const std::string key = q["key"];
        answers[key] = answer(item["item_id"], key, control);
      }
      clock.advance(seconds_per_item);
      post("/sessions/" + id + "/ratings", {{"item_id", item["item_id"]}, {"answers", answers}}, 201);
    }
    const auto done = post("/sessions/" + id + "/demographics", nlohmann::json(demo), 200);
    return {id, s["condition"].get<std::string>(), done["completion_code"].get<std::string>()};
  }
};

}  // namespace sim
