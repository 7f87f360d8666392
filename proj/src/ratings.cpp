#include "cspeech/ratings.hpp"

#include <istream>
#include <ostream>
#include <set>

#include "cspeech/common.hpp"

namespace cspeech::ratings {

void write_ratings_csv(std::ostream& out, std::span<const RatingRow> rows) {
  write_csv_row(out, {"session", "participant", "condition", "config", "item_id", "question", "value"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.session, r.participant, r.condition, r.config, r.item_id, r.question,
                        std::to_string(r.value)});
  }
}

std::vector<RatingRow> read_ratings_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_csv_row(in, f) || f.size() != 7 || f[0] != "session") throw StatsError("ratings: unexpected header");
  std::vector<RatingRow> rows;
  std::size_t line = 1;
  while (read_csv_row(in, f)) {
    ++line;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 7) throw StatsError("ratings line " + std::to_string(line) + ": wrong column count");
    RatingRow r{f[0], f[1], f[2], f[3], f[4], f[5], 0};
    try {
      r.value = std::stoi(f[6]);
    } catch (const std::exception&) {
      throw StatsError("ratings line " + std::to_string(line) + ": bad value '" + f[6] + "'");
    }
    if (r.value < 1 || r.value > 5) throw StatsError("ratings line " + std::to_string(line) + ": value out of range");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_demographics_csv(std::ostream& out, std::span<const DemographicsRow> rows,
                            std::span<const std::string> field_order) {
  std::vector<std::string> header{"session", "participant", "condition"};
  header.insert(header.end(), field_order.begin(), field_order.end());
  write_csv_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.session, r.participant, r.condition};
    for (const auto& key : field_order) {
      const auto it = r.fields.find(key);
      cells.push_back(it == r.fields.end() ? std::string() : it->second);
    }
    write_csv_row(out, cells);
  }
}

std::vector<DemographicsRow> read_demographics_csv(std::istream& in) {
  std::vector<std::string> header;
  if (!read_csv_row(in, header) || header.size() < 3 || header[0] != "session") {
    throw StatsError("demographics: unexpected header");
  }
  std::vector<DemographicsRow> rows;
  std::vector<std::string> f;
  while (read_csv_row(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != header.size()) throw StatsError("demographics: wrong column count");
    DemographicsRow r{f[0], f[1], f[2], {}};
    for (std::size_t i = 3; i < f.size(); ++i) r.fields[header[i]] = f[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RatingRow> filter_by_demographic(std::span<const RatingRow> rows,
                                             std::span<const DemographicsRow> demographics, std::string_view field,
                                             std::string_view value) {
  std::set<std::string> keep;
  for (const auto& d : demographics) {
    const auto it = d.fields.find(std::string(field));
    if (it != d.fields.end() && it->second == value) keep.insert(d.session);
  }
  std::vector<RatingRow> out;
  for (const auto& r : rows) {
    if (keep.contains(r.session)) out.push_back(r);
  }
  return out;
}

stats::PairedMatrix paired_matrix(std::span<const RatingRow> rows, std::string_view question,
                                  std::string_view condition, std::span<const std::string> configs) {
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < configs.size(); ++j) col.emplace(configs[j], j);
  // session -> per-config (sum, count)
  std::map<std::string, std::vector<std::pair<double, int>>> cells;
  for (const auto& r : rows) {
    if (r.question != question || r.condition != condition) continue;
    const auto c = col.find(r.config);
    if (c == col.end()) continue;
    auto& v = cells.try_emplace(r.session, configs.size(), std::pair<double, int>{0.0, 0}).first->second;
    v[c->second].first += r.value;
    v[c->second].second += 1;
  }
  stats::PairedMatrix m;
  m.question = std::string(question);
  m.conditions.assign(configs.begin(), configs.end());
  m.data.resize(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(configs.size()));
  Eigen::Index i = 0;
  for (const auto& [session, v] : cells) {
    for (std::size_t j = 0; j < configs.size(); ++j) {
      if (v[j].second == 0) {
        throw StatsError("session '" + session + "' has no '" + std::string(question) + "' rating for " + configs[j]);
      }
      m.data(i, static_cast<Eigen::Index>(j)) = v[j].first / v[j].second;
    }
    m.participants.push_back(session);
    ++i;
  }
  return m;
}

std::vector<double> session_means(std::span<const RatingRow> rows, std::string_view question,
                                  std::string_view condition, std::string_view config) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    if (r.question != question || r.condition != condition || r.config != config) continue;
    auto& a = acc[r.session];
    a.first += r.value;
    a.second += 1;
  }
  std::vector<double> out;
  for (const auto& [s, a] : acc) out.push_back(a.first / a.second);
  return out;
}

}  // namespace cspeech::ratings
