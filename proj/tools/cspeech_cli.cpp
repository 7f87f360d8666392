// Command-line driver for the counterspeech pipeline.

#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cspeech/pipeline.hpp"
#include "cspeech/survey_http.hpp"
#include "cspeech/synthetic.hpp"

namespace {

using namespace cspeech;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool stub_llm = false;
  bool stub_toxicity = false;
  std::optional<std::string> corpus;
  std::optional<std::string> workspace;
  std::optional<std::string> configs;
  std::optional<std::size_t> max_targets;
  std::optional<std::size_t> workers;
  std::optional<double> threshold;
  std::optional<std::size_t> min_parents;
  std::optional<std::size_t> parents;
  std::optional<std::size_t> history;
  std::optional<std::size_t> summary_source;
  std::optional<std::string> rouge;
  std::optional<std::size_t> representatives;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::optional<std::int64_t> fixed_time;
};

pipeline::RunConfig resolve(const Overrides& o) {
  pipeline::RunConfig c;
  if (!o.config_path.empty()) c = pipeline::load_run_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.stub_llm) c.stub_llm = true;
  if (o.stub_toxicity) c.stub_toxicity = true;
  if (o.corpus) c.corpus_path = *o.corpus;
  if (o.workspace) c.workspace = *o.workspace;
  if (o.configs) {
    c.configs.clear();
    for (const auto& s : split(*o.configs, ',')) {
      if (!trim(s).empty()) c.configs.emplace_back(trim(s));
    }
  }
  if (o.max_targets) c.max_targets = *o.max_targets;
  if (o.workers) c.workers = *o.workers;
  if (o.threshold) c.toxicity_threshold = *o.threshold;
  if (o.min_parents) c.min_parents = *o.min_parents;
  if (o.parents) c.parent_context = *o.parents;
  if (o.history) c.history_size = *o.history;
  if (o.summary_source) c.summary_source = *o.summary_source;
  if (o.rouge) c.rouge = text::parse_rouge_variant(*o.rouge);
  if (o.representatives) c.representatives = *o.representatives;
  if (o.temperature) c.temperature = *o.temperature;
  if (o.max_tokens) c.max_tokens = *o.max_tokens;
  if (o.fixed_time) c.fixed_time = *o.fixed_time;
  return c;
}

survey::SurveyHttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterspeech generation, evaluation and survey pipeline"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master seed");
  app.add_flag("--stub-llm", o.stub_llm, "Use the offline stub instead of HTTP endpoints");
  app.add_flag("--stub-toxicity", o.stub_toxicity, "Use the lexicon toxicity scorer");
  app.add_option("--corpus", o.corpus, "Line-delimited comment records");
  app.add_option("--workspace", o.workspace, "Directory for stage artifacts");
  app.add_option("--configs", o.configs, "Comma-separated configuration labels (default: all 36)");
  app.add_option("--max-targets", o.max_targets, "Cap on the number of toxic targets");
  app.add_option("--workers", o.workers, "Worker threads");
  app.add_option("--toxicity-threshold", o.threshold, "Minimum toxicity of a target");
  app.add_option("--min-parents", o.min_parents, "Minimum ancestors of a target");
  app.add_option("--parents", o.parents, "Parent messages shown as conversation context");
  app.add_option("--history", o.history, "History comments shown in prompts");
  app.add_option("--summary-source", o.summary_source, "History comments sampled per author");
  app.add_option("--rouge", o.rouge, "ROUGE variant: rouge1, rouge2 or rougeL");
  app.add_option("--representatives", o.representatives, "Messages picked per selected configuration");
  app.add_option("--temperature", o.temperature, "Sampling temperature");
  app.add_option("--max-tokens", o.max_tokens, "Completion token limit");
  app.add_option("--fixed-time", o.fixed_time, "Timestamp stamped on records (epoch seconds)");

  auto* ingest = app.add_subcommand("ingest", "Read, score and store the corpus");
  auto* select = app.add_subcommand("select", "Pick toxic targets and sample author histories");
  auto* summarize = app.add_subcommand("summarize-users", "Write author summaries");
  auto* generate = app.add_subcommand("generate", "Generate counterspeech for every configuration and target");
  auto* evaluate = app.add_subcommand("evaluate", "Compute the indicator table");
  auto* rank = app.add_subcommand("rank", "Aggregate indicator rankings into a super-ranking");
  auto* pick = app.add_subcommand("pick", "Select configurations and representative messages");
  auto* run = app.add_subcommand("run", "ingest through pick");

  auto* serve = app.add_subcommand("survey-serve", "Serve the questionnaire API");
  std::optional<std::string> host;
  std::optional<int> port;
  bool export_only = false;
  std::optional<std::string> export_field, export_value;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_flag("--export", export_only, "Write ratings, demographics and verdicts from the event log and exit");
  serve->add_option("--field", export_field, "Demographic field to filter the export on");
  serve->add_option("--value", export_value, "Required value of --field");

  auto* analyze = app.add_subcommand("analyze", "Run the significance tests on exported ratings");
  std::optional<std::string> subgroup;
  analyze->add_option("--subgroup", subgroup, "Restrict to participants with field=value");

  auto* report = app.add_subcommand("report", "Write the configuration table and factor effects");
  pipeline::ReportOptions report_opts;
  report->add_flag("--table1", report_opts.table1, "Also write the 36-row configuration table");
  report->add_flag("--partial", report_opts.allow_partial, "Allow factor effects over an incomplete table");

  auto* pairs = app.add_subcommand("export-pairs", "Write a stratified parent/reply dataset");
  std::size_t n_pairs = 1000;
  pairs->add_option("-n,--count", n_pairs, "Number of pairs");

  auto* synth = app.add_subcommand("synth-corpus", "Write the synthetic corpus");
  std::string synth_out;
  cspeech::synthetic::CorpusOptions synth_opts;
  synth->add_option("--out", synth_out, "Output path")->required();
  synth->add_option("--threads", synth_opts.threads, "Number of threads");
  synth->add_option("--authors", synth_opts.authors, "Number of authors");
  synth->add_option("--comments", synth_opts.comments_per_thread, "Comments per thread");
  synth->add_option("--synth-seed", synth_opts.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      write_file_atomic(synth_out, synthetic::corpus_text(synth_opts));
      return 0;
    }
    pipeline::Pipeline p(resolve(o), &std::cerr);
    if (ingest->parsed()) p.ingest();
    if (select->parsed()) p.select();
    if (summarize->parsed()) p.summarize_users();
    if (generate->parsed()) {
      const auto r = p.generate();
      if (!r.failures.empty()) return 3;
    }
    if (evaluate->parsed()) p.evaluate();
    if (rank->parsed()) p.rank();
    if (pick->parsed()) p.pick();
    if (run->parsed()) p.run_offline();
    if (serve->parsed()) {
      if (export_only) {
        survey::ExportFilter f;
        f.field = export_field;
        f.value = export_value;
        p.survey_export(f);
        return 0;
      }
      auto service = p.survey_service();
      survey::SurveyHttpServer server(*service, survey::admin_token_from_env());
      const int bound = server.bind(host.value_or(p.config().survey_host), port.value_or(p.config().survey_port));
      std::cerr << "survey: listening on port " << bound << '\n';
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
    }
    if (analyze->parsed()) {
      std::optional<std::pair<std::string, std::string>> sg;
      if (subgroup) {
        const auto eq = subgroup->find('=');
        if (eq == std::string::npos) throw PipelineError("--subgroup expects field=value");
        sg.emplace(subgroup->substr(0, eq), subgroup->substr(eq + 1));
      }
      const auto result = p.analyze(sg);
      analysis::write_report_text(std::cout, result);
    }
    if (report->parsed()) p.report(report_opts);
    if (pairs->parsed()) {
      const auto r = p.export_pairs(n_pairs);
      std::cerr << "export-pairs: " << r.total << " pairs\n";
    }
  } catch (const cspeech::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
