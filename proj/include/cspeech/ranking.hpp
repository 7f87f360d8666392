#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cspeech/common.hpp"
#include "cspeech/generation.hpp"
#include "cspeech/indicators.hpp"

namespace cspeech::rank {

struct Ranking {
  std::vector<std::string> labels;  // best first
  std::string source;
  bool higher_is_better = true;
};

enum class AggregationMethod { ExactAssignment, BruteForce };
std::string_view to_string(AggregationMethod m);

struct SuperRanking {
  std::vector<std::string> labels;
  std::int64_t cost = 0;
  AggregationMethod method = AggregationMethod::ExactAssignment;
};

// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
// row/column potentials, O(n^3)). Returns the column assigned to each row.
template <typename Derived>
std::vector<Eigen::Index> solve_assignment(const Eigen::MatrixBase<Derived>& cost) {
  using Scalar = typename Derived::Scalar;
  using Eigen::Index;
  const Index n = cost.rows();
  if (cost.cols() != n) throw RankingError("assignment: cost matrix must be square");
  if (n == 0) return {};
  const Scalar inf = std::numeric_limits<Scalar>::has_infinity ? std::numeric_limits<Scalar>::infinity()
                                                                : std::numeric_limits<Scalar>::max() / 4;
  // 1-based potentials; column 0 is a virtual source.
  std::vector<Scalar> u(n + 1, Scalar(0)), v(n + 1, Scalar(0));
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<Scalar> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = match[j0];
      Scalar delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return row_to_col;
}

using CostMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// cost(item, p) = sum over rankings of |pos_r(item) - p|, items indexed in
// the order of `items`.
CostMatrix footrule_cost_matrix(std::span<const Ranking> rankings, std::span<const std::string> items);

std::int64_t footrule_distance(std::span<const std::string> a, std::span<const std::string> b);
// Total footrule distance of `candidate` to every input ranking.
std::int64_t footrule_cost(std::span<const std::string> candidate, std::span<const Ranking> rankings);

// Sorted by score (direction applied), ties by canonical configuration order.
// Rows missing the indicator are skipped if listed in `may_lack`, otherwise
// RankingError.
Ranking rank_by_indicator(std::span<const ind::ConfigScores> rows, ind::Indicator indicator,
                          const std::set<std::string>& may_lack = {});

// One ranking per indicator over the rows not in `exclude`.
std::vector<Ranking> indicator_rankings(std::span<const ind::ConfigScores> rows,
                                        const std::set<std::string>& exclude);

// Throws RankingError if the rankings disagree on the item set. Brute force
// refuses more than 10 items.
SuperRanking aggregate_footrule(std::span<const Ranking> rankings,
                                AggregationMethod method = AggregationMethod::ExactAssignment);

// ---- selection ----------------------------------------------------------------

enum class Role { Baseline, Best, Worst, BestAndWorst };
std::string_view to_string(Role r);

struct SelectedConfig {
  std::string label;
  gen::Group group = gen::Group::None;
  Role role = Role::Baseline;
};

struct SelectionResult {
  std::vector<SelectedConfig> configs;  // baseline first, then best/worst per group
  std::vector<gen::Group> degenerate_groups;  // single-member groups
  std::map<std::string, std::vector<std::string>> representatives;

  std::vector<std::string> labels() const;
};

// Best and worst (by super-ranking position) of the adaptation,
// personalization and both groups, plus the baseline. Throws RankingError
// when a tailored group has no member in the super-ranking.
SelectionResult select_configurations(const SuperRanking& super, const std::map<std::string, gen::Group>& groups,
                                      const std::string& baseline = "Ba");

// Messages closest to the configuration centroid after per-axis
// z-normalization. Axes missing for any message are dropped, constant axes
// contribute 0. Ties by message id.
std::vector<std::string> select_representative(std::span<const ind::MessageIndicators> messages, std::size_t n);

void write_super_ranking(std::ostream& out, const SuperRanking& s);
void write_super_ranking_csv(std::ostream& out, const SuperRanking& s);
SuperRanking read_super_ranking_csv(std::istream& in);

void write_selection_csv(std::ostream& out, const SelectionResult& s);
SelectionResult read_selection_csv(std::istream& in);
// config,position,message_id
void write_representatives_csv(std::ostream& out, const SelectionResult& s);

// Canonical order used for tie-breaking: enumeration index, unknown labels
// after, then by string.
bool label_less(const std::string& a, const std::string& b);

}  // namespace cspeech::rank
