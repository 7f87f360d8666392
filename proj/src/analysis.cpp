#include "cspeech/analysis.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "cspeech/common.hpp"
#include "cspeech/textmetrics.hpp"

namespace cspeech::analysis {
namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? format_fixed(*v) : ""; }

std::vector<double> column(const stats::PairedMatrix& m, Eigen::Index j) {
  std::vector<double> v(static_cast<std::size_t>(m.data.rows()));
  for (Eigen::Index i = 0; i < m.data.rows(); ++i) v[static_cast<std::size_t>(i)] = m.data(i, j);
  return v;
}

// Mean rating per config, best first; ties by canonical order.
rank::Ranking human_ranking(const stats::PairedMatrix& m, bool lower_better) {
  std::vector<std::pair<std::string, double>> scored;
  for (Eigen::Index j = 0; j < m.data.cols(); ++j) {
    scored.emplace_back(m.conditions[static_cast<std::size_t>(j)], m.data.col(j).mean());
  }
  std::sort(scored.begin(), scored.end(), [lower_better](const auto& a, const auto& b) {
    if (a.second != b.second) return lower_better ? a.second < b.second : a.second > b.second;
    return rank::label_less(a.first, b.first);
  });
  rank::Ranking r;
  r.source = m.question;
  r.higher_is_better = !lower_better;
  for (auto& [label, v] : scored) r.labels.push_back(label);
  return r;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Omnibus:
      return "omnibus";
    case Family::Within:
      return "within";
    case Family::Between:
      return "between";
  }
  return "omnibus";
}

std::vector<const ResultRow*> AnalysisReport::select(Family family, std::string_view question,
                                                     std::string_view condition) const {
  std::vector<const ResultRow*> out;
  for (const auto& r : rows) {
    if (r.family != family) continue;
    if (!question.empty() && r.question != question) continue;
    if (!condition.empty() && r.condition != condition) continue;
    out.push_back(&r);
  }
  return out;
}

AnalysisReport run_analysis(std::span<const ratings::RatingRow> rows, const AnalysisPlan& plan,
                            const std::optional<std::vector<std::string>>& algorithmic) {
  if (rows.empty()) throw StatsError("no ratings to analyze");
  std::vector<std::string> configs = plan.configs;
  if (configs.empty()) {
    std::set<std::string> seen;
    for (const auto& r : rows) seen.insert(r.config);
    if (!seen.contains(plan.baseline)) throw StatsError("ratings lack the baseline '" + plan.baseline + "'");
    configs.push_back(plan.baseline);
    std::vector<std::string> rest;
    for (const auto& c : seen) {
      if (c != plan.baseline) rest.push_back(c);
    }
    std::sort(rest.begin(), rest.end(), rank::label_less);
    configs.insert(configs.end(), rest.begin(), rest.end());
  }
  const auto base_it = std::find(configs.begin(), configs.end(), plan.baseline);
  if (base_it == configs.end()) throw StatsError("plan does not include the baseline '" + plan.baseline + "'");
  const std::size_t within_m = plan.within_m.value_or(configs.size() - 1);
  const std::size_t between_m = plan.between_m.value_or(configs.size());

  // question order: first appearance
  std::vector<std::string> questions;
  std::vector<std::string> conditions;
  for (const auto& r : rows) {
    if (std::find(questions.begin(), questions.end(), r.question) == questions.end()) questions.push_back(r.question);
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) {
      conditions.push_back(r.condition);
    }
  }
  std::sort(conditions.begin(), conditions.end());
  auto lower_better = [&plan](const std::string& q) {
    return std::find(plan.lower_is_better.begin(), plan.lower_is_better.end(), q) != plan.lower_is_better.end();
  };
  auto boot = [&plan](std::string_view family, std::string_view q, std::string_view cond, std::string_view cfg) {
    stats::BootstrapOptions o = plan.bootstrap;
    o.seed = derive_seed(plan.bootstrap.seed, family, q, cond, cfg);
    return o;
  };

  AnalysisReport report;
  for (const auto& cond : conditions) {
    std::vector<rank::Ranking> human;
    for (const auto& q : questions) {
      const bool present = std::any_of(rows.begin(), rows.end(), [&](const ratings::RatingRow& r) {
        return r.question == q && r.condition == cond;
      });
      if (!present) continue;
      const auto m = ratings::paired_matrix(rows, q, cond, configs);
      if (m.data.rows() == 0) continue;
      human.push_back(human_ranking(m, lower_better(q)));
      if (m.data.rows() >= 2 && m.data.cols() >= 3) {
        auto fr = stats::friedman(m);
        fr.comparison = "all";
        report.rows.push_back({Family::Omnibus, q, cond, fr});
      }

      const auto base_col = column(m, m.column(plan.baseline));
      std::vector<ResultRow> family;
      for (const auto& cfg : configs) {
        if (cfg == plan.baseline) continue;
        const auto x = column(m, m.column(cfg));
        stats::TestResult t;
        try {
          t = stats::wilcoxon_signed_rank(x, base_col);
          const auto e = stats::rank_biserial_matched(x, base_col, boot("within", q, cond, cfg));
          t.effect = e.r;
          t.ci_low = e.ci_low;
          t.ci_high = e.ci_high;
        } catch (const StatsError&) {
          t.test = "wilcoxon";
          t.p = 1.0;
          t.effect = 0.0;
          t.ci_low = t.ci_high = 0.0;
          t.n = 0;
          t.note = "no non-zero differences";
        }
        t.comparison = cfg + " vs " + plan.baseline;
        family.push_back({Family::Within, q, cond, t});
      }
      std::vector<double> ps;
      for (const auto& f : family) ps.push_back(f.result.p);
      const auto corrected = stats::bonferroni(ps, within_m);
      for (std::size_t i = 0; i < family.size(); ++i) {
        family[i].result.p_corrected = corrected[i];
        report.rows.push_back(std::move(family[i]));
      }
    }
    if (algorithmic && !human.empty()) {
      const auto super = rank::aggregate_footrule(human);
      std::vector<std::string> algo;
      for (const auto& label : *algorithmic) {
        if (std::find(configs.begin(), configs.end(), label) != configs.end()) algo.push_back(label);
      }
      if (algo.size() != super.labels.size()) {
        throw StatsError("algorithmic ranking does not cover the rated configurations");
      }
      report.rankings.push_back({cond, algo, super.labels, text::kendall_tau(algo, super.labels)});
    }
  }

  const bool both = std::find(conditions.begin(), conditions.end(), ratings::kContextual) != conditions.end() &&
                    std::find(conditions.begin(), conditions.end(), ratings::kNonContextual) != conditions.end();
  if (both) {
    for (const auto& q : questions) {
      std::vector<ResultRow> family;
      for (const auto& cfg : configs) {
        const auto a = ratings::session_means(rows, q, ratings::kContextual, cfg);
        const auto b = ratings::session_means(rows, q, ratings::kNonContextual, cfg);
        if (a.empty() || b.empty()) continue;  // question asked in one condition only
        auto t = stats::mann_whitney_u(a, b);
        const auto e = stats::glass_rank_biserial_ci(a, b, boot("between", q, "", cfg));
        t.effect = e.r;
        t.ci_low = e.ci_low;
        t.ci_high = e.ci_high;
        t.comparison = cfg + ": contextual vs non-contextual";
        family.push_back({Family::Between, q, "all", t});
      }
      if (family.empty()) continue;
      std::vector<double> ps;
      for (const auto& f : family) ps.push_back(f.result.p);
      const auto corrected = stats::bonferroni(ps, between_m);
      for (std::size_t i = 0; i < family.size(); ++i) {
        family[i].result.p_corrected = corrected[i];
        report.rows.push_back(std::move(family[i]));
      }
    }
  }
  return report;
}

rank::SuperRanking algorithmic_ranking(std::span<const ind::ConfigScores> rows,
                                       std::span<const std::string> selected) {
  std::vector<ind::ConfigScores> kept;
  for (const auto& label : selected) {
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const ind::ConfigScores& r) { return r.config == label; });
    if (it == rows.end()) throw RankingError("no indicator scores for '" + label + "'");
    ind::ConfigScores r = *it;
    for (auto& v : r.mean) {
      if (!v) v = 0.0;
    }
    kept.push_back(std::move(r));
  }
  const auto rankings = rank::indicator_rankings(kept, {});
  return rank::aggregate_footrule(rankings);
}

void write_report_csv(std::ostream& out, const AnalysisReport& report) {
  write_csv_row(out, {"family", "question", "condition", "comparison", "test", "statistic", "p", "p_corrected",
                      "effect", "ci_low", "ci_high", "n", "method", "stars", "note"});
  for (const auto& row : report.rows) {
    const auto& t = row.result;
    write_csv_row(out, {std::string(to_string(row.family)), row.question, row.condition, t.comparison, t.test,
                        format_fixed(t.statistic), format_fixed(t.p), format_fixed(t.p_corrected), opt_cell(t.effect),
                        opt_cell(t.ci_low), opt_cell(t.ci_high), std::to_string(t.n), t.method,
                        std::string(stats::stars(t.p_corrected)), t.note});
  }
}

void write_report_text(std::ostream& out, const AnalysisReport& report) {
  std::string last;
  for (const auto& row : report.rows) {
    const std::string heading = std::string(to_string(row.family)) + " / " + row.question + " / " + row.condition;
    if (heading != last) {
      out << '\n' << heading << '\n';
      last = heading;
    }
    const auto& t = row.result;
    out << "  " << t.comparison << ": " << t.test << " stat=" << format_fixed(t.statistic, 3)
        << " p=" << format_fixed(t.p, 4) << " p_adj=" << format_fixed(t.p_corrected, 4);
    if (t.effect) {
      out << " r=" << format_fixed(*t.effect, 3) << " [" << format_fixed(t.ci_low.value_or(0), 3) << ", "
          << format_fixed(t.ci_high.value_or(0), 3) << "]";
    }
    out << ' ' << stats::stars(t.p_corrected) << '\n';
  }
  for (const auto& r : report.rankings) {
    out << "\nranking agreement (" << r.condition << "): kendall tau = " << format_fixed(r.tau, 3) << '\n';
    out << "  algorithmic: " << join(r.algorithmic, " > ") << '\n';
    out << "  human:       " << join(r.human, " > ") << '\n';
  }
}

}  // namespace cspeech::analysis
