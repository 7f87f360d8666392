#include <catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <set>

#include "cspeech/pipeline.hpp"
#include "cspeech/report.hpp"
#include "fixtures.hpp"
#include "survey_sim.hpp"

using namespace cspeech;
using namespace cspeech::pipeline;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig offline(const fs::path& ws, std::size_t workers) {
  RunConfig c;
  c.corpus_path = std::string(CSPEECH_DATA_DIR) + "/synthetic_corpus.jsonl";
  c.workspace = ws.string();
  c.stub_llm = true;
  c.stub_toxicity = true;
  c.configs = {"Ba", "BaPr", "MuRe", "HsHi", "BaSu", "BaPrHi"};
  c.max_targets = 10;
  c.seed = 11;
  c.fixed_time = 1700000000;
  c.workers = workers;
  c.representatives = 3;
  c.bootstrap_replicates = 200;
  return c;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const PipelineError& e) {
    return e.what();
  }
  return {};
}

ind::ConfigScores additive_row(const gen::Configuration& c) {
  ind::ConfigScores r;
  r.config = c.label;
  r.n = 10;
  const bool pr = c.plan.pr;
  for (std::size_t k = 0; k < ind::kIndicatorCount; ++k) r.mean[k] = 0.4 + (pr ? 0.1 : 0.0) + 0.01 * static_cast<double>(k);
  if (c.label == "Ba") r.mean[static_cast<std::size_t>(ind::Indicator::Ada)] = std::nullopt;
  return r;
}

}  // namespace

TEST_CASE("stages name the missing input and its producer") {
  const auto ws = fixture::temp_dir("empty-ws");
  auto c = offline(ws, 1);
  c.corpus_path.clear();
  Pipeline p(c);
  CHECK(error_of([&] { p.select(); }).find("corpus.jsonl; run 'ingest' first") != std::string::npos);
  CHECK(error_of([&] { p.generate(); }).find("corpus.jsonl; run 'ingest' first") != std::string::npos);
  CHECK(error_of([&] { p.rank(); }).find("table.csv; run 'evaluate' first") != std::string::npos);
  CHECK(error_of([&] { p.pick(); }).find("run '") != std::string::npos);
  CHECK(error_of([&] { p.analyze(); }).find("ratings.csv") != std::string::npos);
  CHECK_FALSE(error_of([&] { p.ingest(); }).empty());
  fs::remove_all(ws);
}

TEST_CASE("offline run is reproducible and independent of worker count") {
  const auto a = fixture::temp_dir("run-a");
  const auto b = fixture::temp_dir("run-b");
  Pipeline pa(offline(a, 1));
  pa.run_offline();
  Pipeline pb(offline(b, 6));
  pb.run_offline();
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto* n : {"corpus.jsonl", "targets.jsonl", "summaries.jsonl", "records.jsonl", "table.csv",
                        "messages.csv", "super_ranking.csv", "selection.csv", "representatives.csv",
                        "survey_items.jsonl"}) {
    INFO(n);
    CHECK(names.contains(n));
  }
  for (const auto& n : names) {
    INFO(n);
    CHECK(slurp(a / n) == slurp(b / n));
  }
  const auto records = gen::load_records((a / "records.jsonl").string());
  CHECK(records.size() == 60);

  // generation is cached on rerun
  const auto again = pa.generate();
  CHECK(again.cache_hits == 60);
  CHECK(slurp(a / "records.jsonl") == slurp(b / "records.jsonl"));

  std::ifstream sel(a / "selection.csv");
  const auto selection = rank::read_selection_csv(sel);
  CHECK(selection.labels().front() == "Ba");
  const auto labels = selection.labels();
  std::set<std::string> chosen(labels.begin(), labels.end());
  CHECK(chosen.size() >= 4);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("survey export, analysis and report on top of a run") {
  const auto ws = fixture::temp_dir("survey-ws");
  auto cfg = offline(ws, 2);
  Pipeline p(cfg);
  p.run_offline();
  std::ifstream sel(p.path(Artifact::Selection));
  const auto labels = rank::read_selection_csv(sel).labels();

  {
    sim::ManualClock clock;
    survey::SurveyConfig sc = sim::make_config(labels, 5);
    auto bank = survey::ItemBank::load(p.path(Artifact::SurveyItems).string());
    survey::SurveyService svc(sc, std::move(bank), clock.clock(), p.path(Artifact::SurveyLog).string());
    for (int i = 0; i < 12; ++i) {
      sim::complete_session(svc, clock, "p" + std::to_string(i), sim::Plant::None,
                            sim::demographics(i % 2 ? "Very often (multiple times a day)" : "Never"));
    }
  }
  const auto data = p.survey_export();
  CHECK(data.demographics.size() == 12);
  CHECK(fs::exists(p.path(Artifact::Ratings)));
  CHECK(fs::exists(p.path(Artifact::Verdicts)));

  const auto rep = p.analyze();
  const std::size_t k = labels.size();
  CHECK(rep.select(analysis::Family::Between).size() == k * 6);
  CHECK(rep.rankings.size() == 2);
  CHECK(fs::exists(p.path(Artifact::Analysis)));
  const auto sub = p.analyze(std::make_pair(std::string("social_media_frequency"),
                                            std::string("Very often (multiple times a day)")));
  for (const auto* r : sub.select(analysis::Family::Within)) CHECK(r->result.n <= 6);
  CHECK_THROWS_AS(p.analyze(std::make_pair(std::string("social_media_frequency"), std::string("Rarely"))),
                  PipelineError);

  CHECK_THROWS_AS(p.report({true, false}), RankingError);
  p.report({false, true});
  CHECK(fs::exists(p.path(Artifact::FactorEffects)));
  CHECK(fs::exists(p.path(Artifact::RankingPlot)));
  fs::remove_all(ws);
}

TEST_CASE("table1 and factor effects over a full table") {
  const auto ws = fixture::temp_dir("table1");
  std::vector<ind::ConfigScores> rows;
  for (const auto& c : gen::enumerate_configurations()) rows.push_back(additive_row(c));
  {
    std::ofstream out(ws / "table.csv");
    ind::write_table_csv(out, rows);
  }
  auto cfg = offline(ws, 1);
  Pipeline p(cfg);
  p.report({true, false});
  std::ifstream t1(p.path(Artifact::Table1));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(t1, line)) lines.push_back(line);
  REQUIRE(lines.size() == 37);
  CHECK(lines[0] == "config,group,rel,div,read,tox,ada,lex,wri,n");
  CHECK(lines[1].rfind("Ba,", 0) == 0);
  std::set<std::string> configs;
  for (std::size_t i = 1; i < lines.size(); ++i) configs.insert(lines[i].substr(0, lines[i].find(',')));
  CHECK(configs.size() == 36);

  const auto effects = report::factor_effects(rows);
  CHECK(effects.size() == 7 * 7);
  for (const auto& e : effects) {
    if (e.factor == gen::Factor::Pr) {
      CHECK(*e.delta == Approx(0.1).margin(1e-12));
      CHECK(e.n_with + e.n_without == (e.indicator == ind::Indicator::Ada ? 35u : 36u));
    }
  }
  // within each indicator, |delta| never increases
  for (std::size_t i = 1; i < effects.size(); ++i) {
    if (effects[i].indicator != effects[i - 1].indicator) continue;
    if (effects[i].delta && effects[i - 1].delta) CHECK(std::abs(*effects[i].delta) <= std::abs(*effects[i - 1].delta) + 1e-15);
  }
  rows.pop_back();
  CHECK_THROWS_AS(report::factor_effects(rows), RankingError);
  std::ostringstream sink;
  CHECK_THROWS_AS(report::write_table1_csv(sink, rows), RankingError);

  // a table where every row carries Ba has no "without" side for it
  std::vector<ind::ConfigScores> only_ba;
  for (const auto& c : gen::enumerate_configurations()) {
    if (c.has(gen::Factor::Ba)) only_ba.push_back(additive_row(c));
  }
  for (const auto& e : report::factor_effects(only_ba, false)) {
    if (e.factor == gen::Factor::Ba) {
      CHECK_FALSE(e.mean_without);
      CHECK_FALSE(e.delta);
    }
    CHECK(e.factor != gen::Factor::Mu);
  }
  fs::remove_all(ws);
}

TEST_CASE("run configuration file") {
  const auto dir = fixture::temp_dir("ini");
  const auto path = dir / "run.ini";
  {
    std::ofstream out(path);
    out << "[run]\nseed = 99\nconfigs = Ba, MuRe\nfixed_time = 1234\n"
        << "[thresholds]\ntoxicity = 0.7\n"
        << "[metrics]\nrouge = rouge2\ntoxicity = stub\n"
        << "[generation]\ntemperature = 0.2\nstub = true\n"
        << "[binding.Mu]\nurl = http://localhost:9000/v1/chat/completions\nmodel = my-model\napi_key_env = MY_KEY\n";
  }
  const auto c = load_run_config(path.string());
  CHECK(c.seed == 99);
  CHECK(c.configs == std::vector<std::string>{"Ba", "MuRe"});
  CHECK(c.fixed_time == std::optional<std::int64_t>(1234));
  CHECK(c.toxicity_threshold == 0.7);
  CHECK(c.rouge == text::RougeVariant::R2F);
  CHECK(c.stub_toxicity);
  CHECK(c.stub_llm);
  CHECK(c.temperature == 0.2);
  REQUIRE(c.bindings.contains("Mu"));
  CHECK(c.bindings.at("Mu").model == "my-model");
  CHECK(c.history_size == 10);

  {
    std::ofstream out(path);
    out << "[binding.Hs]\nmodel = only-a-model\n";
  }
  CHECK_THROWS_AS(load_run_config(path.string()), PipelineError);
  {
    std::ofstream out(path);
    out << "[thresholds]\ntoxicity = high\n";
  }
  CHECK_THROWS_AS(load_run_config(path.string()), PipelineError);
  RunConfig bad;
  bad.configs = {"BaRe"};
  CHECK_THROWS(bad.validate());
  fs::remove_all(dir);
}
