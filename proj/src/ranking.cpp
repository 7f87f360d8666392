#include "cspeech/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace cspeech::rank {
namespace {

std::size_t canonical_index(const std::string& label) {
  static const auto order = [] {
    std::unordered_map<std::string, std::size_t> m;
    const auto configs = gen::enumerate_configurations();
    for (std::size_t i = 0; i < configs.size(); ++i) m.emplace(configs[i].label, i);
    return m;
  }();
  const auto it = order.find(label);
  return it == order.end() ? order.size() : it->second;
}

std::unordered_map<std::string, std::int64_t> positions(std::span<const std::string> labels) {
  std::unordered_map<std::string, std::int64_t> pos;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!pos.emplace(labels[i], static_cast<std::int64_t>(i)).second) {
      throw RankingError("ranking lists '" + labels[i] + "' twice");
    }
  }
  return pos;
}

gen::Group parse_group(const std::string& s) {
  for (auto g : {gen::Group::None, gen::Group::Adaptation, gen::Group::Personalization, gen::Group::Both}) {
    if (gen::to_string(g) == s) return g;
  }
  throw RankingError("unknown group '" + s + "'");
}

Role parse_role(const std::string& s) {
  for (auto r : {Role::Baseline, Role::Best, Role::Worst, Role::BestAndWorst}) {
    if (to_string(r) == s) return r;
  }
  throw RankingError("unknown role '" + s + "'");
}

}  // namespace

bool label_less(const std::string& a, const std::string& b) {
  const auto ia = canonical_index(a);
  const auto ib = canonical_index(b);
  return ia != ib ? ia < ib : a < b;
}

std::string_view to_string(AggregationMethod m) {
  return m == AggregationMethod::ExactAssignment ? "exact-assignment" : "brute-force";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Baseline:
      return "baseline";
    case Role::Best:
      return "best";
    case Role::Worst:
      return "worst";
    case Role::BestAndWorst:
      return "best+worst";
  }
  return "baseline";
}

CostMatrix footrule_cost_matrix(std::span<const Ranking> rankings, std::span<const std::string> items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  CostMatrix cost = CostMatrix::Zero(n, n);
  for (const auto& r : rankings) {
    const auto pos = positions(r.labels);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto it = pos.find(items[static_cast<std::size_t>(i)]);
      if (it == pos.end()) throw RankingError("ranking '" + r.source + "' lacks item '" + items[i] + "'");
      for (Eigen::Index p = 0; p < n; ++p) cost(i, p) += std::abs(it->second - p);
    }
  }
  return cost;
}

std::int64_t footrule_distance(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) throw RankingError("footrule: rankings differ in length");
  const auto pos = positions(b);
  std::int64_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto it = pos.find(a[i]);
    if (it == pos.end()) throw RankingError("footrule: item '" + a[i] + "' missing");
    d += std::abs(static_cast<std::int64_t>(i) - it->second);
  }
  return d;
}

std::int64_t footrule_cost(std::span<const std::string> candidate, std::span<const Ranking> rankings) {
  std::int64_t total = 0;
  for (const auto& r : rankings) total += footrule_distance(candidate, r.labels);
  return total;
}

Ranking rank_by_indicator(std::span<const ind::ConfigScores> rows, ind::Indicator indicator,
                          const std::set<std::string>& may_lack) {
  const bool higher = ind::higher_is_better(indicator);
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& r : rows) {
    const auto v = r.get(indicator);
    if (!v) {
      if (may_lack.contains(r.config)) continue;
      throw RankingError("configuration '" + r.config + "' has no " + std::string(ind::to_string(indicator)) +
                         " value");
    }
    scored.emplace_back(r.config, *v);
  }
  std::sort(scored.begin(), scored.end(), [higher](const auto& a, const auto& b) {
    if (a.second != b.second) return higher ? a.second > b.second : a.second < b.second;
    return label_less(a.first, b.first);
  });
  Ranking out;
  out.source = std::string(ind::to_string(indicator));
  out.higher_is_better = higher;
  for (auto& [label, v] : scored) out.labels.push_back(std::move(label));
  return out;
}

std::vector<Ranking> indicator_rankings(std::span<const ind::ConfigScores> rows,
                                        const std::set<std::string>& exclude) {
  std::vector<ind::ConfigScores> kept;
  for (const auto& r : rows) {
    if (!exclude.contains(r.config)) kept.push_back(r);
  }
  std::vector<Ranking> out;
  for (auto i : ind::all_indicators()) out.push_back(rank_by_indicator(kept, i));
  return out;
}

SuperRanking aggregate_footrule(std::span<const Ranking> rankings, AggregationMethod method) {
  if (rankings.empty()) throw RankingError("aggregation needs at least one ranking");
  std::vector<std::string> items = rankings.front().labels;
  std::sort(items.begin(), items.end(), label_less);
  for (const auto& r : rankings) {
    std::vector<std::string> other = r.labels;
    std::sort(other.begin(), other.end(), label_less);
    if (other != items) throw RankingError("rankings are over different item sets ('" + r.source + "')");
  }
  const CostMatrix cost = footrule_cost_matrix(rankings, items);
  const std::size_t n = items.size();

  SuperRanking out;
  out.method = method;
  out.labels.resize(n);
  if (method == AggregationMethod::ExactAssignment) {
    const auto assign = solve_assignment(cost);
    for (std::size_t i = 0; i < n; ++i) {
      out.labels[static_cast<std::size_t>(assign[i])] = items[i];
      out.cost += cost(static_cast<Eigen::Index>(i), assign[i]);
    }
    return out;
  }

  if (n > 10) throw RankingError("brute-force aggregation limited to 10 items");
  // perm[p] = item placed at position p; first minimum in lexicographic order wins.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();
  do {
    std::int64_t c = 0;
    for (std::size_t p = 0; p < n; ++p) c += cost(static_cast<Eigen::Index>(perm[p]), static_cast<Eigen::Index>(p));
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t p = 0; p < n; ++p) out.labels[p] = items[best[p]];
  out.cost = n == 0 ? 0 : best_cost;
  return out;
}

std::vector<std::string> SelectionResult::labels() const {
  std::vector<std::string> out;
  for (const auto& c : configs) out.push_back(c.label);
  return out;
}

SelectionResult select_configurations(const SuperRanking& super, const std::map<std::string, gen::Group>& groups,
                                      const std::string& baseline) {
  SelectionResult out;
  out.configs.push_back({baseline, gen::Group::None, Role::Baseline});
  for (auto g : {gen::Group::Adaptation, gen::Group::Personalization, gen::Group::Both}) {
    std::vector<std::string> members;
    for (const auto& label : super.labels) {
      const auto it = groups.find(label);
      if (it == groups.end()) throw RankingError("no group for configuration '" + label + "'");
      if (it->second == g) members.push_back(label);
    }
    if (members.empty()) throw RankingError("group '" + std::string(gen::to_string(g)) + "' has no configurations");
    if (members.size() == 1) {
      out.configs.push_back({members.front(), g, Role::BestAndWorst});
      out.degenerate_groups.push_back(g);
      continue;
    }
    out.configs.push_back({members.front(), g, Role::Best});
    out.configs.push_back({members.back(), g, Role::Worst});
  }
  return out;
}

std::vector<std::string> select_representative(std::span<const ind::MessageIndicators> messages, std::size_t n) {
  if (messages.empty()) throw RankingError("representative selection needs at least one message");
  std::vector<std::size_t> axes;
  for (std::size_t a = 0; a < ind::kIndicatorCount; ++a) {
    const bool complete = std::all_of(messages.begin(), messages.end(),
                                      [a](const ind::MessageIndicators& m) { return m.v.values[a].has_value(); });
    if (complete) axes.push_back(a);
  }
  const auto rows = static_cast<Eigen::Index>(messages.size());
  const auto cols = static_cast<Eigen::Index>(axes.size());
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = *messages[i].v.values[axes[j]];
  }
  if (cols > 0) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(rows));
      if (sd > 0.0) {
        x.col(j) /= sd;
      } else {
        x.col(j).setZero();
      }
    }
  }
  const Eigen::VectorXd dist = cols > 0 ? Eigen::VectorXd(x.rowwise().norm()) : Eigen::VectorXd::Zero(rows);
  std::vector<std::size_t> order(messages.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return messages[a].message_id < messages[b].message_id;
  });
  std::vector<std::string> out;
  for (std::size_t k = 0; k < std::min(n, order.size()); ++k) out.push_back(messages[order[k]].message_id);
  return out;
}

void write_super_ranking(std::ostream& out, const SuperRanking& s) {
  out << "# method: " << to_string(s.method) << "\n# footrule cost: " << s.cost << '\n';
  for (std::size_t i = 0; i < s.labels.size(); ++i) out << (i + 1) << ". " << s.labels[i] << '\n';
}

void write_super_ranking_csv(std::ostream& out, const SuperRanking& s) {
  write_csv_row(out, {"position", "label", "cost", "method"});
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    write_csv_row(out, {std::to_string(i + 1), s.labels[i], std::to_string(s.cost), std::string(to_string(s.method))});
  }
}

SuperRanking read_super_ranking_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_csv_row(in, f) || f.size() != 4 || f[0] != "position") throw RankingError("super-ranking: bad header");
  SuperRanking s;
  while (read_csv_row(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 4) throw RankingError("super-ranking: wrong column count");
    s.labels.push_back(f[1]);
    s.cost = std::stoll(f[2]);
    s.method = f[3] == "brute-force" ? AggregationMethod::BruteForce : AggregationMethod::ExactAssignment;
  }
  return s;
}

void write_selection_csv(std::ostream& out, const SelectionResult& s) {
  write_csv_row(out, {"label", "group", "role"});
  for (const auto& c : s.configs) {
    write_csv_row(out, {c.label, std::string(gen::to_string(c.group)), std::string(to_string(c.role))});
  }
}

SelectionResult read_selection_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_csv_row(in, f) || f.size() != 3 || f[0] != "label") throw RankingError("selection: bad header");
  SelectionResult s;
  while (read_csv_row(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 3) throw RankingError("selection: wrong column count");
    s.configs.push_back({f[0], parse_group(f[1]), parse_role(f[2])});
    if (s.configs.back().role == Role::BestAndWorst) s.degenerate_groups.push_back(s.configs.back().group);
  }
  return s;
}

void write_representatives_csv(std::ostream& out, const SelectionResult& s) {
  write_csv_row(out, {"config", "position", "message_id"});
  for (const auto& c : s.configs) {
    const auto it = s.representatives.find(c.label);
    if (it == s.representatives.end()) continue;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      write_csv_row(out, {c.label, std::to_string(i + 1), it->second[i]});
    }
  }
}

}  // namespace cspeech::rank
