#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "cspeech/analysis.hpp"
#include "cspeech/generation.hpp"
#include "cspeech/indicators.hpp"

namespace cspeech::report {

struct FactorEffect {
  gen::Factor factor = gen::Factor::Ba;
  ind::Indicator indicator = ind::Indicator::Rel;
  std::optional<double> mean_with;
  std::optional<double> mean_without;  // absent when every config has the factor
  std::optional<double> delta;         // with - without
  std::size_t n_with = 0;
  std::size_t n_without = 0;
};

// Mean of each indicator over configs with vs without each factor. Rows lacking
// an indicator value are skipped for that indicator. Cells with no config
// carrying the factor are omitted. Output is grouped by indicator; within an
// indicator, factors by decreasing |delta| (absent last, then factor order).
// With `require_all`, throws RankingError unless all 36 configs are present.
std::vector<FactorEffect> factor_effects(std::span<const ind::ConfigScores> rows, bool require_all = true);

// indicator,factor,mean_with,mean_without,delta,n_with,n_without
void write_factor_effects_csv(std::ostream& out, std::span<const FactorEffect> effects);
// One dumbbell per line: {"indicator","factor","with","without","delta"}.
void write_factor_effects_jsonl(std::ostream& out, std::span<const FactorEffect> effects);

// The full configuration table in canonical order, with the group column.
// Throws RankingError unless all 36 configs are present.
void write_table1_csv(std::ostream& out, std::span<const ind::ConfigScores> rows);

// condition,position,algorithmic,human,tau
void write_ranking_comparison_csv(std::ostream& out, std::span<const analysis::RankingComparison> rankings);
// One line per (condition, config): {"condition","config","algorithmic","human"} positions, 1-based.
void write_ranking_comparison_jsonl(std::ostream& out, std::span<const analysis::RankingComparison> rankings);
std::vector<analysis::RankingComparison> read_ranking_comparison_csv(std::istream& in);

}  // namespace cspeech::report
