#include "cspeech/survey.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cspeech::survey {
namespace {

using nlohmann::json;

SurveyError bad_request(const std::string& what) { return SurveyError(400, what); }
SurveyError conflict(const std::string& what) { return SurveyError(409, what); }

json slot_to_json(const Slot& s) {
  return {{"item_id", s.item_id}, {"config", s.config}, {"control", s.control}, {"expected", s.expected}};
}

}  // namespace

std::string_view to_string(Condition c) {
  return c == Condition::Contextual ? ratings::kContextual : ratings::kNonContextual;
}

Condition parse_condition(std::string_view s) {
  if (s == ratings::kContextual) return Condition::Contextual;
  if (s == ratings::kNonContextual) return Condition::NonContextual;
  throw SurveyError(400, "unknown condition '" + std::string(s) + "'");
}

const std::vector<Question>& questions(Condition c) {
  static const std::vector<Question> base{
      {"relevance", "The response is relevant to the toxic post."},
      {"adequacy", "The response is suitable as counterspeech."},
      {"truthfulness", "The response is truthful (i.e., honest, sincere)."},
      {"persuade_author",
       "The response would persuade the author of the toxic post to re-engage in the conversation in a civil "
       "manner."},
      {"persuade_conversation", "The response would steer the overall conversation back to civil discourse."},
      {"artificiality", "The response was generated by AI."},
  };
  static const std::vector<Question> contextual = [] {
    auto q = base;
    q.push_back({"contextualization",
                 "The counterspeech response is personalized (as opposed to being generic) with respect to the "
                 "post’s context."});
    return q;
  }();
  return c == Condition::Contextual ? contextual : base;
}

std::vector<std::string> question_keys(Condition c) {
  std::vector<std::string> keys;
  for (const auto& q : questions(c)) keys.push_back(q.key);
  return keys;
}

const std::vector<DemographicField>& demographic_fields() {
  static const std::vector<DemographicField> fields{
      {"age", "Age", {}},
      {"gender", "Gender", {"Female", "Male", "Non-binary or gender diverse", "I prefer not to disclose"}},
      {"education", "Education", {"High school or less", "Some college", "College graduate or more"}},
      {"ethnicity",
       "Which of the following describes your race/ethnicity?",
       {"Asian/Asian American", "Black/African American", "Hispanic/Latino", "White/Caucasian", "Other"}},
      {"political_affiliation",
       "Which of the following describes best your political affiliation?",
       {"Democratic", "Lean Democratic", "Lean Republican", "Republican"}},
      {"social_media_frequency",
       "How frequently do you use social media (e.g., Facebook, Twitter/X, Instagram, Reddit, etc.)?",
       {"Never", "Rarely (less than once a week)", "Sometimes (once a week to several times a week)",
        "Often (daily)", "Very often (multiple times a day)"}},
      {"social_media_count",
       "How many different social media do you actively use (at least once a week)?",
       {"None", "1", "2-3", "4-5", "5+"}},
  };
  return fields;
}

std::vector<std::string> demographic_keys() {
  std::vector<std::string> keys;
  for (const auto& f : demographic_fields()) keys.push_back(f.key);
  return keys;
}

void ItemBank::add(SurveyItem item) {
  if (find(item.item_id) != nullptr) throw SurveyError(500, "duplicate survey item '" + item.item_id + "'");
  by_config[item.config].push_back(std::move(item));
}

const SurveyItem* ItemBank::find(std::string_view item_id) const {
  for (const auto& [config, items] : by_config) {
    for (const auto& it : items) {
      if (it.item_id == item_id) return &it;
    }
  }
  return nullptr;
}

ItemBank ItemBank::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SurveyError(500, "cannot open survey items '" + path + "'");
  ItemBank bank;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      SurveyItem item;
      item.item_id = j.at("item_id").get<std::string>();
      item.toxic = j.at("toxic").get<std::string>();
      item.counterspeech = j.at("counterspeech").get<std::string>();
      item.config = j.at("config").get<std::string>();
      if (const auto c = j.find("context"); c != j.end()) {
        item.context = {c->value("community", std::string()), c->value("previous_message", std::string()),
                        c->value("user_summary", std::string())};
      }
      bank.add(std::move(item));
    } catch (const json::exception& e) {
      throw SurveyError(500, "malformed survey item in '" + path + "': " + e.what());
    }
  }
  return bank;
}

void ItemBank::save(const std::string& path) const {
  std::ostringstream out;
  for (const auto& [config, items] : by_config) {
    for (const auto& it : items) {
      out << json{{"item_id", it.item_id},
                  {"toxic", it.toxic},
                  {"counterspeech", it.counterspeech},
                  {"config", it.config},
                  {"context",
                   {{"community", it.context.community},
                    {"previous_message", it.context.previous_message},
                    {"user_summary", it.context.user_summary}}}}
                 .dump()
          << '\n';
    }
  }
  write_file_atomic(path, out.str());
}

std::vector<ControlItem> SurveyConfig::default_controls() {
  return {
      {"control-agree", "This is an attention check.",
       "To show that you are reading carefully, select \"strongly agree\" (5) for every statement about this "
       "response.",
       5},
      {"control-disagree", "This is another attention check.",
       "To show that you are reading carefully, select \"strongly disagree\" (1) for every statement about this "
       "response.",
       1},
  };
}

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Active:
      return "active";
    case SessionStatus::AwaitingDemographics:
      return "awaiting-demographics";
    case SessionStatus::Complete:
      return "complete";
    case SessionStatus::Expired:
      return "expired";
  }
  return "active";
}

std::size_t Session::rated_count() const {
  return static_cast<std::size_t>(std::count_if(slots.begin(), slots.end(), [](const Slot& s) { return s.rated; }));
}

std::string_view to_string(QualityReason r) {
  switch (r) {
    case QualityReason::TooFast:
      return "too-fast";
    case QualityReason::ControlFailed:
      return "control-failed";
    case QualityReason::StraightLined:
      return "straight-lined";
  }
  return "too-fast";
}

QualityVerdict quality_filter(const Session& session, const QualityThresholds& thresholds) {
  if (session.status != SessionStatus::Complete) throw conflict("session '" + session.id + "' is not complete");
  QualityVerdict v;
  v.session = session.id;
  if (session.finished_at - session.started_at < thresholds.min_duration_seconds) {
    v.reasons.push_back(QualityReason::TooFast);
  }
  bool control_failed = false;
  std::set<int> distinct;
  for (const auto& s : session.slots) {
    for (const auto& [key, value] : s.answers) {
      if (s.control) {
        control_failed = control_failed || value != s.expected;
      } else {
        distinct.insert(value);
      }
    }
  }
  if (control_failed) v.reasons.push_back(QualityReason::ControlFailed);
  if (distinct.size() == 1) v.reasons.push_back(QualityReason::StraightLined);
  v.pass = v.reasons.empty();
  return v;
}

SurveyService::SurveyService(SurveyConfig config, ItemBank bank, Clock clock, std::string log_path)
    : config_(std::move(config)), bank_(std::move(bank)), clock_(std::move(clock)), log_path_(std::move(log_path)) {
  if (config_.configs.empty()) throw SurveyError(500, "survey has no configurations");
  if (config_.items_per_config == 0) throw SurveyError(500, "items_per_config must be positive");
  if (config_.control_positions.size() != config_.controls.size()) {
    throw SurveyError(500, "control positions and control items differ in number");
  }
  for (const auto& c : config_.configs) {
    const auto it = bank_.by_config.find(c);
    if (it == bank_.by_config.end() || it->second.empty()) {
      throw SurveyError(500, "no survey items for configuration '" + c + "'");
    }
  }
  replay();
}

Session SurveyService::plan_session(const std::string& participant, std::size_t index, std::int64_t now) const {
  Session s;
  s.id = "s" + hex64(derive_seed(config_.seed, "session-id", static_cast<std::uint64_t>(index)));
  s.participant = participant;
  s.condition = index % 2 == 0 ? Condition::NonContextual : Condition::Contextual;
  s.started_at = now;
  Rng rng(derive_seed(config_.seed, "session", static_cast<std::uint64_t>(index)));
  s.within_order = config_.configs;
  partial_shuffle(s.within_order, s.within_order.size(), rng);
  for (const auto& config : s.within_order) {
    std::vector<const SurveyItem*> pool;
    for (const auto& it : bank_.by_config.at(config)) pool.push_back(&it);
    const std::size_t take = std::min(config_.items_per_config, pool.size());
    partial_shuffle(pool, take, rng);
    for (std::size_t i = 0; i < take; ++i) {
      Slot slot;
      slot.item_id = pool[i]->item_id;
      slot.config = config;
      s.slots.push_back(std::move(slot));
    }
  }
  std::vector<std::size_t> order(config_.controls.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [this](std::size_t a, std::size_t b) { return config_.control_positions[a] < config_.control_positions[b]; });
  for (std::size_t k : order) {
    Slot slot;
    slot.item_id = config_.controls[k].item_id;
    slot.control = true;
    slot.expected = config_.controls[k].expected;
    const auto pos = std::min(config_.control_positions[k], s.slots.size());
    s.slots.insert(s.slots.begin() + static_cast<std::ptrdiff_t>(pos), std::move(slot));
  }
  return s;
}

void SurveyService::append_event(const std::string& line) {
  if (log_path_.empty()) return;
  std::ofstream out(log_path_, std::ios::app | std::ios::binary);
  if (!out) throw SurveyError(500, "cannot append to survey log '" + log_path_ + "'");
  const std::string l = line + "\n";
  out.write(l.data(), static_cast<std::streamsize>(l.size()));
  out.flush();
  if (!out) throw SurveyError(500, "short write to survey log '" + log_path_ + "'");
}

void SurveyService::replay() {
  if (log_path_.empty()) return;
  std::ifstream in(log_path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json e = json::parse(line);
      const std::string type = e.at("event");
      if (type == "session") {
        Session s;
        s.id = e.at("id");
        s.participant = e.at("participant");
        s.condition = parse_condition(e.at("condition").get<std::string>());
        s.within_order = e.at("order").get<std::vector<std::string>>();
        s.started_at = e.at("at");
        for (const auto& j : e.at("slots")) {
          Slot slot;
          slot.item_id = j.at("item_id");
          slot.config = j.at("config");
          slot.control = j.at("control");
          slot.expected = j.at("expected");
          s.slots.push_back(std::move(slot));
        }
        by_id_[s.id] = sessions_.size();
        sessions_.push_back(std::move(s));
        created_ = std::max(created_, e.at("index").get<std::size_t>() + 1);
        continue;
      }
      Session& s = sessions_.at(by_id_.at(e.at("session").get<std::string>()));
      if (type == "served") {
        s.slots.at(e.at("slot").get<std::size_t>()).served = true;
      } else if (type == "rating") {
        Slot& slot = s.slots.at(e.at("slot").get<std::size_t>());
        slot.served = slot.rated = true;
        slot.answers = e.at("answers").get<std::map<std::string, int>>();
        slot.rated_at = e.at("at");
        if (s.rated_count() == s.slots.size()) s.status = SessionStatus::AwaitingDemographics;
      } else if (type == "demographics") {
        s.demographics = e.at("answers").get<std::map<std::string, std::string>>();
        s.finished_at = e.at("at");
        s.completion_code = e.at("code");
        s.status = SessionStatus::Complete;
      } else if (type == "expired") {
        s.status = SessionStatus::Expired;
      } else {
        throw SurveyError(500, "unknown event '" + type + "'");
      }
    } catch (const std::exception& ex) {
      throw SurveyError(500, "survey log line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
}

Session& SurveyService::lookup(const std::string& session_id) {
  const auto it = by_id_.find(session_id);
  if (it == by_id_.end()) throw SurveyError(404, "unknown session '" + session_id + "'");
  return sessions_[it->second];
}

void SurveyService::expire_if_stale(Session& s) {
  if (s.status != SessionStatus::Active && s.status != SessionStatus::AwaitingDemographics) return;
  if (clock_() - s.started_at <= config_.session_ttl_seconds) return;
  append_event(json{{"event", "expired"}, {"session", s.id}}.dump());
  s.status = SessionStatus::Expired;
}

Session SurveyService::create_session(const std::string& participant, bool consent) {
  if (!consent) throw bad_request("informed consent is required before starting");
  if (trim(participant).empty()) throw bad_request("participant id is required");
  std::lock_guard lock(mutex_);
  for (auto& s : sessions_) {
    if (s.participant != participant) continue;
    expire_if_stale(s);
    if (s.status == SessionStatus::Complete) throw conflict("participant has already completed the questionnaire");
    if (s.status != SessionStatus::Expired) return s;
  }
  const std::int64_t now = clock_();
  Session s = plan_session(participant, created_, now);
  json slots = json::array();
  for (const auto& slot : s.slots) slots.push_back(slot_to_json(slot));
  append_event(json{{"event", "session"},
                    {"index", created_},
                    {"id", s.id},
                    {"participant", participant},
                    {"condition", to_string(s.condition)},
                    {"order", s.within_order},
                    {"slots", slots},
                    {"at", now}}
                   .dump());
  ++created_;
  by_id_[s.id] = sessions_.size();
  sessions_.push_back(s);
  return s;
}

NextItem SurveyService::next_item(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  Session& s = lookup(session_id);
  expire_if_stale(s);
  if (s.status == SessionStatus::Expired) throw SurveyError(410, "session has expired");
  NextItem out;
  out.total = s.slots.size();
  if (s.status != SessionStatus::Active) {
    out.done = true;
    out.position = out.total;
    return out;
  }
  const auto it = std::find_if(s.slots.begin(), s.slots.end(), [](const Slot& slot) { return !slot.rated; });
  const auto idx = static_cast<std::size_t>(it - s.slots.begin());
  if (!it->served) {
    append_event(json{{"event", "served"}, {"session", s.id}, {"slot", idx}}.dump());
    it->served = true;
  }
  out.position = idx;
  out.control = it->control;
  SurveyItem item;
  if (it->control) {
    const auto& c = *std::find_if(config_.controls.begin(), config_.controls.end(),
                                  [&](const ControlItem& ci) { return ci.item_id == it->item_id; });
    item.item_id = c.item_id;
    item.toxic = c.toxic;
    item.counterspeech = c.counterspeech;
  } else {
    const SurveyItem* src = bank_.find(it->item_id);
    if (src == nullptr) throw SurveyError(500, "survey item '" + it->item_id + "' vanished");
    item = *src;
    item.config.clear();
    if (s.condition != Condition::Contextual) item.context = {};
  }
  out.item = std::move(item);
  return out;
}

void SurveyService::record_rating(const std::string& session_id, const std::string& item_id,
                                  const std::map<std::string, int>& answers) {
  std::lock_guard lock(mutex_);
  Session& s = lookup(session_id);
  expire_if_stale(s);
  if (s.status == SessionStatus::Expired) throw SurveyError(410, "session has expired");
  const auto it = std::find_if(s.slots.begin(), s.slots.end(), [&](const Slot& slot) { return slot.item_id == item_id; });
  if (it == s.slots.end()) throw SurveyError(404, "item '" + item_id + "' is not part of this session");
  if (it->rated) throw conflict("item '" + item_id + "' has already been rated");
  if (!it->served) throw conflict("item '" + item_id + "' has not been served yet");
  if (s.status != SessionStatus::Active) throw conflict("session is not accepting ratings");

  const auto keys = question_keys(s.condition);
  for (const auto& key : keys) {
    if (!answers.contains(key)) throw bad_request("missing answer for '" + key + "'");
  }
  for (const auto& [key, value] : answers) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw bad_request("question '" + key + "' does not apply to the " + std::string(to_string(s.condition)) +
                        " condition");
    }
    if (value < 1 || value > 5) throw bad_request("answer for '" + key + "' must be between 1 and 5");
  }
  const std::int64_t now = clock_();
  const auto idx = static_cast<std::size_t>(it - s.slots.begin());
  append_event(json{{"event", "rating"}, {"session", s.id}, {"slot", idx}, {"answers", answers}, {"at", now}}.dump());
  it->rated = true;
  it->answers = answers;
  it->rated_at = now;
  if (s.rated_count() == s.slots.size()) s.status = SessionStatus::AwaitingDemographics;
}

std::string SurveyService::submit_demographics(const std::string& session_id,
                                               const std::map<std::string, std::string>& answers) {
  std::lock_guard lock(mutex_);
  Session& s = lookup(session_id);
  expire_if_stale(s);
  if (s.status == SessionStatus::Expired) throw SurveyError(410, "session has expired");
  if (s.status == SessionStatus::Complete) throw conflict("demographics already submitted");
  if (s.status != SessionStatus::AwaitingDemographics) throw conflict("questionnaire items are not finished");
  for (const auto& f : demographic_fields()) {
    const auto it = answers.find(f.key);
    if (it == answers.end()) throw bad_request("missing demographic field '" + f.key + "'");
    if (f.options.empty()) {
      int age = 0;
      std::size_t used = 0;
      try {
        age = std::stoi(it->second, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != it->second.size() || age < 0 || age > 130) {
        throw bad_request("'" + f.key + "' must be a number");
      }
    } else if (std::find(f.options.begin(), f.options.end(), it->second) == f.options.end()) {
      throw bad_request("'" + it->second + "' is not an option for '" + f.key + "'");
    }
  }
  for (const auto& [key, value] : answers) {
    const auto& fields = demographic_fields();
    if (std::none_of(fields.begin(), fields.end(), [&](const DemographicField& f) { return f.key == key; })) {
      throw bad_request("unknown demographic field '" + key + "'");
    }
  }
  const std::int64_t now = clock_();
  std::string code = hex64(derive_seed(config_.seed, "completion", s.id)).substr(0, 10);
  std::transform(code.begin(), code.end(), code.begin(), [](unsigned char c) { return std::toupper(c); });
  append_event(json{{"event", "demographics"}, {"session", s.id}, {"answers", answers}, {"at", now}, {"code", code}}
                   .dump());
  s.demographics = answers;
  s.finished_at = now;
  s.completion_code = code;
  s.status = SessionStatus::Complete;
  return code;
}

Session SurveyService::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = by_id_.find(session_id);
  if (it == by_id_.end()) throw SurveyError(404, "unknown session '" + session_id + "'");
  return sessions_[it->second];
}

std::vector<Session> SurveyService::sessions() const {
  std::lock_guard lock(mutex_);
  return sessions_;
}

QualityVerdict SurveyService::verdict(const std::string& session_id) const {
  return quality_filter(session(session_id), {config_.min_duration_seconds});
}

RatingsExport SurveyService::export_ratings(const ExportFilter& filter) const {
  if (filter.field.has_value() != filter.value.has_value()) {
    throw bad_request("a subgroup filter needs both a field and a value");
  }
  std::lock_guard lock(mutex_);
  RatingsExport out;
  for (const auto& s : sessions_) {
    if (s.status != SessionStatus::Complete) continue;
    auto v = quality_filter(s, {config_.min_duration_seconds});
    const bool pass = v.pass;
    out.verdicts.push_back(std::move(v));
    if (!pass) continue;
    if (filter.field) {
      const auto it = s.demographics.find(*filter.field);
      if (it == s.demographics.end() || it->second != *filter.value) continue;
    }
    const std::string cond(to_string(s.condition));
    for (const auto& slot : s.slots) {
      if (slot.control) continue;
      for (const auto& q : questions(s.condition)) {
        out.ratings.push_back({s.id, s.participant, cond, slot.config, slot.item_id, q.key, slot.answers.at(q.key)});
      }
    }
    out.demographics.push_back({s.id, s.participant, cond, s.demographics});
  }
  if (out.demographics.empty()) throw SurveyError(404, "no passing sessions to export");
  return out;
}

}  // namespace cspeech::survey
