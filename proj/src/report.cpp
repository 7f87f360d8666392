#include "cspeech/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "cspeech/common.hpp"
#include "json.hpp"

namespace cspeech::report {
namespace {

using nlohmann::json;

std::string cell(const std::optional<double>& v) { return v ? format_fixed(*v) : std::string("--"); }

json jcell(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const ind::ConfigScores* find_row(std::span<const ind::ConfigScores> rows, const std::string& label) {
  for (const auto& r : rows) {
    if (r.config == label) return &r;
  }
  return nullptr;
}

void require_complete(std::span<const ind::ConfigScores> rows) {
  for (const auto& c : gen::enumerate_configurations()) {
    if (find_row(rows, c.label) == nullptr) throw RankingError("indicator table lacks configuration '" + c.label + "'");
  }
}

}  // namespace

std::vector<FactorEffect> factor_effects(std::span<const ind::ConfigScores> rows, bool require_all) {
  if (require_all) require_complete(rows);
  if (rows.empty()) throw RankingError("indicator table is empty");
  std::vector<FactorEffect> out;
  for (auto indicator : ind::all_indicators()) {
    std::vector<FactorEffect> block;
    for (auto factor : gen::all_factors()) {
      double with = 0.0, without = 0.0;
      FactorEffect e;
      e.factor = factor;
      e.indicator = indicator;
      for (const auto& r : rows) {
        const auto v = r.get(indicator);
        if (!v) continue;
        if (gen::parse_configuration(r.config).has(factor)) {
          with += *v;
          ++e.n_with;
        } else {
          without += *v;
          ++e.n_without;
        }
      }
      if (e.n_with == 0) continue;
      e.mean_with = with / static_cast<double>(e.n_with);
      if (e.n_without > 0) {
        e.mean_without = without / static_cast<double>(e.n_without);
        e.delta = *e.mean_with - *e.mean_without;
      }
      block.push_back(e);
    }
    std::stable_sort(block.begin(), block.end(), [](const FactorEffect& a, const FactorEffect& b) {
      if (a.delta.has_value() != b.delta.has_value()) return a.delta.has_value();
      if (!a.delta) return false;
      return std::abs(*a.delta) > std::abs(*b.delta);
    });
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

void write_factor_effects_csv(std::ostream& out, std::span<const FactorEffect> effects) {
  write_csv_row(out, {"indicator", "factor", "mean_with", "mean_without", "delta", "n_with", "n_without"});
  for (const auto& e : effects) {
    write_csv_row(out, {std::string(ind::to_string(e.indicator)), std::string(gen::tag(e.factor)), cell(e.mean_with),
                        cell(e.mean_without), cell(e.delta), std::to_string(e.n_with), std::to_string(e.n_without)});
  }
}

void write_factor_effects_jsonl(std::ostream& out, std::span<const FactorEffect> effects) {
  for (const auto& e : effects) {
    out << json{{"indicator", ind::to_string(e.indicator)},
                {"factor", gen::tag(e.factor)},
                {"with", jcell(e.mean_with)},
                {"without", jcell(e.mean_without)},
                {"delta", jcell(e.delta)}}
               .dump()
        << '\n';
  }
}

void write_table1_csv(std::ostream& out, std::span<const ind::ConfigScores> rows) {
  require_complete(rows);
  std::vector<std::string> header{"config", "group"};
  for (auto i : ind::all_indicators()) header.emplace_back(ind::to_string(i));
  header.emplace_back("n");
  write_csv_row(out, header);
  for (const auto& c : gen::enumerate_configurations()) {
    const auto* r = find_row(rows, c.label);
    std::vector<std::string> cells{c.label, std::string(gen::to_string(c.group()))};
    for (auto i : ind::all_indicators()) cells.push_back(cell(r->get(i)));
    cells.push_back(std::to_string(r->n));
    write_csv_row(out, cells);
  }
}

void write_ranking_comparison_csv(std::ostream& out, std::span<const analysis::RankingComparison> rankings) {
  write_csv_row(out, {"condition", "position", "algorithmic", "human", "tau"});
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < r.algorithmic.size(); ++i) {
      write_csv_row(out, {r.condition, std::to_string(i + 1), r.algorithmic[i], r.human.at(i), format_fixed(r.tau)});
    }
  }
}

void write_ranking_comparison_jsonl(std::ostream& out, std::span<const analysis::RankingComparison> rankings) {
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < r.algorithmic.size(); ++i) {
      const auto& label = r.algorithmic[i];
      const auto h = std::find(r.human.begin(), r.human.end(), label);
      out << json{{"condition", r.condition},
                  {"config", label},
                  {"algorithmic", i + 1},
                  {"human", h == r.human.end() ? json(nullptr) : json(h - r.human.begin() + 1)},
                  {"tau", r.tau}}
                 .dump()
          << '\n';
    }
  }
}

std::vector<analysis::RankingComparison> read_ranking_comparison_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_csv_row(in, f) || f.size() != 5 || f[0] != "condition") {
    throw RankingError("ranking comparison: unexpected header");
  }
  std::vector<analysis::RankingComparison> out;
  while (read_csv_row(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 5) throw RankingError("ranking comparison: wrong column count");
    if (out.empty() || out.back().condition != f[0]) out.push_back({f[0], {}, {}, std::stod(f[4])});
    out.back().algorithmic.push_back(f[2]);
    out.back().human.push_back(f[3]);
  }
  return out;
}

}  // namespace cspeech::report
