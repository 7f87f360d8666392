#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cspeech/stats.hpp"

namespace cspeech::ratings {

inline constexpr std::string_view kNonContextual = "non-contextual";
inline constexpr std::string_view kContextual = "contextual";

// One Likert answer from a passing session. Control items never appear here.
struct RatingRow {
  std::string session;
  std::string participant;
  std::string condition;
  std::string config;
  std::string item_id;
  std::string question;
  int value = 0;
};

struct DemographicsRow {
  std::string session;
  std::string participant;
  std::string condition;
  std::map<std::string, std::string> fields;
};

void write_ratings_csv(std::ostream& out, std::span<const RatingRow> rows);
std::vector<RatingRow> read_ratings_csv(std::istream& in);

// Columns: session, participant, condition, then `field_order`.
void write_demographics_csv(std::ostream& out, std::span<const DemographicsRow> rows,
                            std::span<const std::string> field_order);
std::vector<DemographicsRow> read_demographics_csv(std::istream& in);

// Rows of sessions whose demographic `field` equals `value`.
std::vector<RatingRow> filter_by_demographic(std::span<const RatingRow> rows,
                                             std::span<const DemographicsRow> demographics, std::string_view field,
                                             std::string_view value);

// Sessions x configs for one question and condition; a cell is the mean of
// that session's answers for the config. Throws StatsError if any session
// lacks a config.
stats::PairedMatrix paired_matrix(std::span<const RatingRow> rows, std::string_view question,
                                  std::string_view condition, std::span<const std::string> configs);

// Per-session mean answer for one config, question and condition.
std::vector<double> session_means(std::span<const RatingRow> rows, std::string_view question,
                                  std::string_view condition, std::string_view config);

}  // namespace cspeech::ratings
