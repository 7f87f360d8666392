#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cspeech/indicators.hpp"
#include "cspeech/ranking.hpp"
#include "cspeech/ratings.hpp"
#include "cspeech/stats.hpp"

namespace cspeech::analysis {

struct AnalysisPlan {
  std::string baseline = "Ba";
  // Configurations under test, baseline included. Empty: every config in the
  // data, baseline first, the rest in canonical order.
  std::vector<std::string> configs;
  // Bonferroni family sizes; default to the number of comparisons made.
  std::optional<std::size_t> within_m;
  std::optional<std::size_t> between_m;
  stats::BootstrapOptions bootstrap;
  std::vector<std::string> lower_is_better{"artificiality"};
};

enum class Family { Omnibus, Within, Between };
std::string_view to_string(Family f);

struct ResultRow {
  Family family = Family::Omnibus;
  std::string question;
  std::string condition;  // "all" for between-condition tests
  stats::TestResult result;
};

struct RankingComparison {
  std::string condition;
  std::vector<std::string> algorithmic;
  std::vector<std::string> human;
  double tau = 0.0;
};

struct AnalysisReport {
  std::vector<ResultRow> rows;
  std::vector<RankingComparison> rankings;

  std::vector<const ResultRow*> select(Family family, std::string_view question = {},
                                       std::string_view condition = {}) const;
};

// Per condition and question: Friedman over the configs, then each config
// against the baseline (Wilcoxon, Bonferroni m = configs - 1, matched
// rank-biserial effect with bootstrap CI). Per question and config: contextual
// vs non-contextual (Mann-Whitney, Bonferroni m = configs, Glass effect).
// With an algorithmic ranking, Kendall tau against the human super-ranking of
// each condition. Throws StatsError when a session misses a config.
AnalysisReport run_analysis(std::span<const ratings::RatingRow> rows, const AnalysisPlan& plan,
                            const std::optional<std::vector<std::string>>& algorithmic_ranking = std::nullopt);

// Footrule super-ranking of `selected` from their indicator means. An
// indicator a configuration lacks (the baseline's ada) counts as 0.
rank::SuperRanking algorithmic_ranking(std::span<const ind::ConfigScores> rows,
                                       std::span<const std::string> selected);

// family,question,condition,comparison,test,statistic,p,p_corrected,effect,ci_low,ci_high,n,method,stars,note
void write_report_csv(std::ostream& out, const AnalysisReport& report);
void write_report_text(std::ostream& out, const AnalysisReport& report);

}  // namespace cspeech::analysis
