#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cspeech/analysis.hpp"
#include "cspeech/chat_endpoint.hpp"
#include "cspeech/corpus.hpp"
#include "cspeech/generation.hpp"
#include "cspeech/indicators.hpp"
#include "cspeech/ranking.hpp"
#include "cspeech/survey.hpp"
#include "cspeech/textmetrics.hpp"

namespace cspeech::pipeline {

struct BindingSpec {
  std::string url;
  std::string model;
  std::string api_key_env;
};

struct RunConfig {
  std::string corpus_path;
  std::string workspace = "workspace";
  std::map<std::string, BindingSpec> bindings;  // keyed by model binding (Ba, Mu, ...)
  std::string summarizer = "Ba";                // binding used for user summaries
  bool stub_llm = false;
  bool stub_toxicity = false;
  std::string perspective_url;  // empty: the public endpoint

  double toxicity_threshold = 0.5;
  std::size_t min_parents = 2;
  std::size_t parent_context = 2;
  std::size_t history_size = 10;
  std::size_t summary_source = 20;
  text::RougeVariant rouge = text::RougeVariant::RLF;
  std::size_t representatives = 20;
  std::uint64_t seed = 0;

  std::vector<std::string> configs;  // empty: all 36
  std::size_t max_targets = 0;       // 0: every selected target
  std::string baseline = "Ba";
  double temperature = 0.7;
  int max_tokens = 256;
  int retries = 1;
  std::size_t workers = 0;  // 0: hardware concurrency

  std::string survey_host = "127.0.0.1";
  int survey_port = 8080;
  std::size_t items_per_config = 1;
  std::int64_t min_duration_seconds = 120;
  std::int64_t session_ttl_seconds = 3 * 3600;
  std::size_t bootstrap_replicates = 10000;

  // Timestamp for every record; otherwise SOURCE_DATE_EPOCH, otherwise now.
  std::optional<std::int64_t> fixed_time;

  // Throws PipelineError on a non-positive size or an unknown configuration.
  void validate() const;
};

// INI file with sections [run] [thresholds] [context] [metrics] [generation]
// [survey] [analysis] and one [binding.<name>] per endpoint. Keys override
// the fields of `base`.
RunConfig load_run_config(const std::string& path, RunConfig base = {});

enum class Artifact {
  Corpus,
  Targets,
  Summaries,
  Records,
  Failures,
  Table,
  Messages,
  SuperRanking,
  SuperRankingText,
  Selection,
  Representatives,
  SurveyItems,
  SurveyLog,
  Ratings,
  Demographics,
  Verdicts,
  Analysis,
  AnalysisText,
  RankingComparison,
  RankingPlot,
  Table1,
  FactorEffects,
  FactorEffectsPlot,
  Pairs,
  ToxicityCache,
};
std::string_view file_name(Artifact a);

struct ReportOptions {
  bool table1 = false;
  bool allow_partial = false;  // factor effects over an incomplete table
};

// Stages read their inputs from, and write their outputs to, the workspace.
// A stage whose input is missing throws PipelineError naming the file and the
// stage that produces it.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::ostream* log = nullptr);
  ~Pipeline();

  corpus::IngestReport ingest();
  std::size_t select();
  std::size_t summarize_users();
  gen::Generator::SweepResult generate();
  ind::IndicatorTable evaluate();
  rank::SuperRanking rank();
  rank::SelectionResult pick();
  std::unique_ptr<survey::SurveyService> survey_service();
  survey::RatingsExport survey_export(const survey::ExportFilter& filter = {});
  analysis::AnalysisReport analyze(const std::optional<std::pair<std::string, std::string>>& subgroup = std::nullopt);
  void report(const ReportOptions& options);
  corpus::PairExport export_pairs(std::size_t n);

  // ingest through pick.
  void run_offline();

  std::filesystem::path path(Artifact a) const;
  const RunConfig& config() const { return config_; }
  Clock clock() const { return clock_; }

 private:
  std::filesystem::path require(Artifact a, std::string_view producer) const;
  void note(const std::string& message);
  corpus::Corpus load_corpus() const;
  std::vector<corpus::ToxicTarget> load_targets() const;
  std::vector<gen::Configuration> configurations() const;
  ind::ToxicityScorer& scorer();
  std::map<std::string, gen::EndpointBinding> bindings(const std::vector<gen::Configuration>& configs);
  gen::ChatEndpoint& endpoint(const std::string& binding);
  gen::GenerationParams params() const;
  std::vector<std::pair<std::string, std::string>> summary_source(const corpus::Corpus& corpus,
                                                                  const corpus::ToxicTarget& target) const;

  RunConfig config_;
  std::ostream* log_;
  Clock clock_;
  std::unique_ptr<ind::ToxicityScorer> scorer_;
  std::map<std::string, std::unique_ptr<gen::ChatEndpoint>> endpoints_;
};

}  // namespace cspeech::pipeline
