#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cspeech/common.hpp"
#include "cspeech/ratings.hpp"

namespace cspeech::survey {

enum class Condition { NonContextual, Contextual };
std::string_view to_string(Condition c);
Condition parse_condition(std::string_view s);

struct Question {
  std::string key;
  std::string statement;
};

// Six questions, plus contextualization in the contextual condition.
const std::vector<Question>& questions(Condition c);
std::vector<std::string> question_keys(Condition c);

struct DemographicField {
  std::string key;
  std::string prompt;
  std::vector<std::string> options;  // empty: numeric
};
const std::vector<DemographicField>& demographic_fields();
std::vector<std::string> demographic_keys();

struct ItemContext {
  std::string community;
  std::string previous_message;
  std::string user_summary;
};

struct SurveyItem {
  std::string item_id;
  std::string toxic;
  std::string counterspeech;
  std::string config;
  ItemContext context;  // served only in the contextual condition
};

// Item pool per configuration; loaded from / saved to line-delimited records.
struct ItemBank {
  std::map<std::string, std::vector<SurveyItem>> by_config;

  void add(SurveyItem item);
  const SurveyItem* find(std::string_view item_id) const;
  static ItemBank load(const std::string& path);
  void save(const std::string& path) const;
};

struct ControlItem {
  std::string item_id;
  std::string toxic;
  std::string counterspeech;
  int expected = 5;  // every answer on the page must equal this
};

struct SurveyConfig {
  std::vector<std::string> configs;  // the within-subjects conditions
  std::size_t items_per_config = 1;
  std::vector<ControlItem> controls;
  std::vector<std::size_t> control_positions{3, 6};  // 0-based slots in the served sequence
  std::int64_t min_duration_seconds = 120;
  std::int64_t session_ttl_seconds = 3 * 3600;
  std::uint64_t seed = 0;

  // Two controls: "strongly agree" and "strongly disagree" instructions.
  static std::vector<ControlItem> default_controls();
};

enum class SessionStatus { Active, AwaitingDemographics, Complete, Expired };
std::string_view to_string(SessionStatus s);

struct Slot {
  std::string item_id;
  std::string config;  // empty for controls
  bool control = false;
  int expected = 0;
  bool served = false;
  bool rated = false;
  std::map<std::string, int> answers;
  std::int64_t rated_at = 0;
};

struct Session {
  std::string id;
  std::string participant;
  Condition condition = Condition::NonContextual;
  std::vector<std::string> within_order;
  std::vector<Slot> slots;
  std::int64_t started_at = 0;
  std::int64_t finished_at = 0;
  SessionStatus status = SessionStatus::Active;
  std::map<std::string, std::string> demographics;
  std::string completion_code;

  std::size_t rated_count() const;
};

struct NextItem {
  bool done = false;
  std::optional<SurveyItem> item;  // config cleared; context only when contextual
  bool control = false;
  std::size_t position = 0;
  std::size_t total = 0;
};

enum class QualityReason { TooFast, ControlFailed, StraightLined };
std::string_view to_string(QualityReason r);

struct QualityVerdict {
  std::string session;
  bool pass = true;
  std::vector<QualityReason> reasons;
};

struct QualityThresholds {
  std::int64_t min_duration_seconds = 120;
};

// Pure verdict on a complete session. Throws SurveyError(409) otherwise.
QualityVerdict quality_filter(const Session& session, const QualityThresholds& thresholds);

struct ExportFilter {
  std::optional<std::string> field;  // demographic key, e.g. "social_media_frequency"
  std::optional<std::string> value;
};

struct RatingsExport {
  std::vector<ratings::RatingRow> ratings;
  std::vector<ratings::DemographicsRow> demographics;
  std::vector<QualityVerdict> verdicts;  // every complete session
};

// The experiment service. Every operation takes one lock, so per-session
// transitions are serialized and exports see a consistent snapshot. State
// changes are appended to an event log (when a path is given) and replayed
// on construction. SurveyError carries the HTTP status to report.
class SurveyService {
 public:
  SurveyService(SurveyConfig config, ItemBank bank, Clock clock, std::string log_path = {});

  Session create_session(const std::string& participant, bool consent);
  NextItem next_item(const std::string& session_id);
  void record_rating(const std::string& session_id, const std::string& item_id,
                     const std::map<std::string, int>& answers);
  std::string submit_demographics(const std::string& session_id, const std::map<std::string, std::string>& answers);

  Session session(const std::string& session_id) const;
  std::vector<Session> sessions() const;
  QualityVerdict verdict(const std::string& session_id) const;
  RatingsExport export_ratings(const ExportFilter& filter = {}) const;

  const SurveyConfig& config() const { return config_; }

 private:
  Session& lookup(const std::string& session_id);
  void expire_if_stale(Session& s);
  void append_event(const std::string& line);
  void replay();
  Session plan_session(const std::string& participant, std::size_t index, std::int64_t now) const;

  SurveyConfig config_;
  ItemBank bank_;
  Clock clock_;
  std::string log_path_;
  mutable std::mutex mutex_;
  std::vector<Session> sessions_;
  std::map<std::string, std::size_t> by_id_;
  std::size_t created_ = 0;
};

}  // namespace cspeech::survey
