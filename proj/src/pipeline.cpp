#include "cspeech/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cspeech/perspective_client.hpp"
#include "cspeech/ratings.hpp"
#include "cspeech/report.hpp"

namespace cspeech::pipeline {
namespace fs = std::filesystem;

namespace {

template <typename T>
void read_key(const boost::property_tree::ptree& pt, const std::string& key, T& field) {
  if (pt.get_child_optional(key)) field = pt.get<T>(key);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& part : split(s, ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PipelineError("cannot open '" + p.string() + "'");
  return in;
}

template <typename F>
void write_with(const fs::path& p, F&& body) {
  std::ostringstream out;
  body(out);
  write_file_atomic(p.string(), out.str());
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw PipelineError(std::string(name) + " must be positive");
  };
  positive(min_parents, "min_parents");
  positive(parent_context, "parent_context");
  positive(history_size, "history_size");
  positive(summary_source, "summary_source");
  positive(representatives, "representatives");
  positive(items_per_config, "items_per_config");
  positive(bootstrap_replicates, "bootstrap_replicates");
  if (parent_context < min_parents) throw PipelineError("parent_context must be at least min_parents");
  if (max_tokens <= 0) throw PipelineError("max_tokens must be positive");
  if (retries < 0) throw PipelineError("retries must not be negative");
  if (!(toxicity_threshold >= 0.0 && toxicity_threshold <= 1.0)) {
    throw PipelineError("toxicity threshold must lie in [0, 1]");
  }
  if (workspace.empty()) throw PipelineError("workspace path is empty");
  for (const auto& c : configs) {
    try {
      gen::parse_configuration(c);
    } catch (const GenerationError& e) {
      throw PipelineError(std::string("configs: ") + e.what());
    }
  }
  if (!configs.empty() && std::find(configs.begin(), configs.end(), baseline) == configs.end()) {
    throw PipelineError("configs must include the baseline '" + baseline + "'");
  }
}

RunConfig load_run_config(const std::string& path, RunConfig c) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw PipelineError("run config: " + std::string(e.what()));
  }
  try {
    read_key(pt, "run.corpus", c.corpus_path);
    read_key(pt, "run.workspace", c.workspace);
    read_key(pt, "run.seed", c.seed);
    read_key(pt, "run.workers", c.workers);
    read_key(pt, "run.baseline", c.baseline);
    read_key(pt, "run.max_targets", c.max_targets);
    if (auto v = pt.get_optional<std::string>("run.configs")) c.configs = split_list(*v);
    if (pt.get_child_optional("run.fixed_time")) c.fixed_time = pt.get<std::int64_t>("run.fixed_time");

    read_key(pt, "thresholds.toxicity", c.toxicity_threshold);
    read_key(pt, "thresholds.min_parents", c.min_parents);
    read_key(pt, "context.parents", c.parent_context);
    read_key(pt, "context.history", c.history_size);
    read_key(pt, "context.summary_source", c.summary_source);
    if (auto v = pt.get_optional<std::string>("metrics.rouge")) c.rouge = text::parse_rouge_variant(*v);
    read_key(pt, "metrics.representatives", c.representatives);
    if (auto v = pt.get_optional<std::string>("metrics.toxicity")) {
      if (*v != "stub" && *v != "perspective") throw PipelineError("metrics.toxicity must be stub or perspective");
      c.stub_toxicity = *v == "stub";
    }
    read_key(pt, "metrics.perspective_url", c.perspective_url);

    read_key(pt, "generation.temperature", c.temperature);
    read_key(pt, "generation.max_tokens", c.max_tokens);
    read_key(pt, "generation.retries", c.retries);
    read_key(pt, "generation.stub", c.stub_llm);
    read_key(pt, "generation.summarizer", c.summarizer);

    read_key(pt, "survey.host", c.survey_host);
    read_key(pt, "survey.port", c.survey_port);
    read_key(pt, "survey.items_per_config", c.items_per_config);
    read_key(pt, "survey.min_duration_seconds", c.min_duration_seconds);
    read_key(pt, "survey.session_ttl_seconds", c.session_ttl_seconds);
    read_key(pt, "analysis.bootstrap_replicates", c.bootstrap_replicates);
  } catch (const boost::property_tree::ptree_bad_data& e) {
    throw PipelineError("run config: bad value (" + std::string(e.what()) + ")");
  }
  for (const auto& [section, body] : pt) {
    if (!starts_with(section, "binding.")) continue;
    BindingSpec b;
    b.url = body.get<std::string>("url", "");
    b.model = body.get<std::string>("model", "");
    b.api_key_env = body.get<std::string>("api_key_env", "");
    if (b.url.empty() || b.model.empty()) throw PipelineError("[" + section + "] needs url and model");
    c.bindings[section.substr(8)] = b;
  }
  return c;
}

std::string_view file_name(Artifact a) {
  switch (a) {
    case Artifact::Corpus:
      return "corpus.jsonl";
    case Artifact::Targets:
      return "targets.jsonl";
    case Artifact::Summaries:
      return "summaries.jsonl";
    case Artifact::Records:
      return "records.jsonl";
    case Artifact::Failures:
      return "generation_failures.jsonl";
    case Artifact::Table:
      return "table.csv";
    case Artifact::Messages:
      return "messages.csv";
    case Artifact::SuperRanking:
      return "super_ranking.csv";
    case Artifact::SuperRankingText:
      return "super_ranking.txt";
    case Artifact::Selection:
      return "selection.csv";
    case Artifact::Representatives:
      return "representatives.csv";
    case Artifact::SurveyItems:
      return "survey_items.jsonl";
    case Artifact::SurveyLog:
      return "survey_events.jsonl";
    case Artifact::Ratings:
      return "ratings.csv";
    case Artifact::Demographics:
      return "demographics.csv";
    case Artifact::Verdicts:
      return "verdicts.csv";
    case Artifact::Analysis:
      return "analysis.csv";
    case Artifact::AnalysisText:
      return "analysis.txt";
    case Artifact::RankingComparison:
      return "ranking_comparison.csv";
    case Artifact::RankingPlot:
      return "ranking_comparison.jsonl";
    case Artifact::Table1:
      return "table1.csv";
    case Artifact::FactorEffects:
      return "factor_effects.csv";
    case Artifact::FactorEffectsPlot:
      return "factor_effects.jsonl";
    case Artifact::Pairs:
      return "pairs.jsonl";
    case Artifact::ToxicityCache:
      return "toxicity_cache.jsonl";
  }
  return "unknown";
}

Pipeline::Pipeline(RunConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {
  config_.validate();
  if (config_.workers == 0) config_.workers = default_workers();
  if (config_.fixed_time) {
    clock_ = fixed_clock(*config_.fixed_time);
  } else if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    try {
      clock_ = fixed_clock(std::stoll(epoch));
    } catch (const std::exception&) {
      throw PipelineError("SOURCE_DATE_EPOCH is not an integer");
    }
  } else {
    clock_ = system_clock();
  }
  fs::create_directories(config_.workspace);
}

Pipeline::~Pipeline() = default;

fs::path Pipeline::path(Artifact a) const { return fs::path(config_.workspace) / std::string(file_name(a)); }

fs::path Pipeline::require(Artifact a, std::string_view producer) const {
  const auto p = path(a);
  if (!fs::exists(p)) {
    throw PipelineError("missing " + p.string() + "; run '" + std::string(producer) + "' first");
  }
  return p;
}

void Pipeline::note(const std::string& message) {
  if (log_ != nullptr) *log_ << message << '\n';
}

corpus::Corpus Pipeline::load_corpus() const {
  return corpus::Corpus::ingest_file(require(Artifact::Corpus, "ingest").string(), {true});
}

std::vector<corpus::ToxicTarget> Pipeline::load_targets() const {
  auto in = open_in(require(Artifact::Targets, "select"));
  return corpus::load_targets(in);
}

std::vector<gen::Configuration> Pipeline::configurations() const {
  if (config_.configs.empty()) return gen::enumerate_configurations();
  std::set<std::string> wanted(config_.configs.begin(), config_.configs.end());
  std::vector<gen::Configuration> out;
  for (auto& c : gen::enumerate_configurations()) {
    if (wanted.contains(c.label)) out.push_back(std::move(c));
  }
  return out;
}

ind::ToxicityScorer& Pipeline::scorer() {
  if (!scorer_) {
    if (config_.stub_toxicity) {
      scorer_ = std::make_unique<ind::StubToxicityScorer>(ind::StubToxicityScorer::default_lexicon());
    } else {
      ind::PerspectiveOptions o;
      if (!config_.perspective_url.empty()) o.url = config_.perspective_url;
      o.cache_path = path(Artifact::ToxicityCache).string();
      scorer_ = std::make_unique<ind::PerspectiveScorer>(o);
    }
  }
  return *scorer_;
}

gen::ChatEndpoint& Pipeline::endpoint(const std::string& binding) {
  const std::string key = config_.stub_llm ? std::string("stub") : binding;
  auto it = endpoints_.find(key);
  if (it != endpoints_.end()) return *it->second;
  std::unique_ptr<gen::ChatEndpoint> e;
  if (config_.stub_llm) {
    e = std::make_unique<gen::StubChatEndpoint>("stub");
  } else {
    const auto b = config_.bindings.find(binding);
    if (b == config_.bindings.end()) {
      throw PipelineError("no endpoint configured for model binding '" + binding + "'; add [binding." + binding +
                          "] or use --stub-llm");
    }
    gen::HttpEndpointOptions o;
    o.url = b->second.url;
    o.api_key_env = b->second.api_key_env;
    e = std::make_unique<gen::HttpChatEndpoint>(binding, o);
  }
  return *endpoints_.emplace(key, std::move(e)).first->second;
}

std::map<std::string, gen::EndpointBinding> Pipeline::bindings(const std::vector<gen::Configuration>& configs) {
  std::map<std::string, gen::EndpointBinding> out;
  for (const auto& c : configs) {
    if (out.contains(c.model_binding)) continue;
    const std::string model = config_.stub_llm ? "stub-" + c.model_binding : config_.bindings.at(c.model_binding).model;
    out[c.model_binding] = {&endpoint(c.model_binding), model};
  }
  return out;
}

gen::GenerationParams Pipeline::params() const {
  return {config_.temperature, config_.max_tokens, config_.seed, config_.retries};
}

std::vector<std::pair<std::string, std::string>> Pipeline::summary_source(const corpus::Corpus& corpus,
                                                                          const corpus::ToxicTarget& target) const {
  std::vector<std::pair<std::string, std::string>> out;
  const std::size_t n = std::min(config_.summary_source, target.author_history.size());
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(target.author_history[i], corpus.at(target.author_history[i]).body);
  return out;
}

corpus::IngestReport Pipeline::ingest() {
  if (config_.corpus_path.empty()) throw PipelineError("no corpus path configured");
  corpus::IngestReport rep;
  auto corpus = corpus::Corpus::ingest_file(config_.corpus_path, {}, &rep);
  if (corpus.size() == 0) throw PipelineError("corpus '" + config_.corpus_path + "' has no usable comments");
  if (!corpus.fully_scored()) ind::score_corpus(corpus, scorer(), config_.workers);
  corpus::build_threads(corpus);  // rejects cyclic parent links early
  corpus.save_file(path(Artifact::Corpus).string());
  note("ingest: " + std::to_string(rep.accepted) + " accepted, " + std::to_string(rep.rejected) + " rejected, " +
       std::to_string(rep.duplicates) + " duplicates, " + std::to_string(rep.deleted) + " deleted");
  return rep;
}

std::size_t Pipeline::select() {
  const auto corpus = load_corpus();
  auto candidates =
      corpus::select_toxic_targets(corpus, config_.toxicity_threshold, config_.min_parents, config_.parent_context);
  std::vector<corpus::ToxicTarget> targets;
  std::size_t dropped = 0;
  for (auto& t : candidates) {
    if (config_.max_targets != 0 && targets.size() == config_.max_targets) break;
    try {
      const auto h = corpus::sample_user_history(corpus, corpus.at(t.comment_id).author, config_.summary_source,
                                                 t.comment_id, config_.seed);
      t.author_history = h.comment_ids;
      targets.push_back(std::move(t));
    } catch (const CorpusError&) {
      ++dropped;
    }
  }
  if (targets.empty()) throw PipelineError("no toxic comments qualify as targets");
  write_with(path(Artifact::Targets), [&](std::ostream& out) { corpus::save_targets(out, targets); });
  note("select: " + std::to_string(targets.size()) + " targets (" + std::to_string(dropped) +
       " dropped for lack of earlier history)");
  return targets.size();
}

std::size_t Pipeline::summarize_users() {
  const auto corpus = load_corpus();
  const auto targets = load_targets();
  gen::SummaryCache cache(path(Artifact::Summaries).string());
  auto& ep = endpoint(config_.summarizer);
  const std::string model =
      config_.stub_llm ? "stub-" + config_.summarizer : config_.bindings.at(config_.summarizer).model;
  std::size_t n = 0;
  for (const auto& t : targets) {
    const auto source = summary_source(corpus, t);
    gen::summarize_user(corpus.at(t.comment_id).author, source, ep, model, params(), cache);
    ++n;
  }
  // An empty cache still leaves the artifact behind.
  if (!fs::exists(path(Artifact::Summaries))) write_file_atomic(path(Artifact::Summaries).string(), "");
  note("summarize-users: " + std::to_string(n) + " summaries");
  return n;
}

gen::Generator::SweepResult Pipeline::generate() {
  const auto corpus = load_corpus();
  const auto targets = load_targets();
  const auto configs = configurations();
  const bool needs_summary =
      std::any_of(configs.begin(), configs.end(), [](const gen::Configuration& c) { return c.plan.su; });
  std::unique_ptr<gen::SummaryCache> summaries;
  if (needs_summary) {
    summaries = std::make_unique<gen::SummaryCache>(require(Artifact::Summaries, "summarize-users").string());
  }

  std::vector<gen::Generator::Job> jobs;
  for (const auto& c : configs) {
    for (const auto& t : targets) {
      std::optional<std::string> summary;
      if (c.plan.su) {
        const auto& author = corpus.at(t.comment_id).author;
        std::vector<std::string> ids;
        for (const auto& [id, body] : summary_source(corpus, t)) ids.push_back(id);
        const auto s = summaries->find(author, ids);
        if (!s) throw PipelineError("no summary for target '" + t.comment_id + "'; rerun 'summarize-users'");
        summary = s->text;
      }
      jobs.push_back({c, t.comment_id, corpus.at(t.comment_id).body,
                      gen::build_context(c, corpus, t, summary, config_.history_size)});
    }
  }
  gen::RecordStore store(path(Artifact::Records).string());
  gen::Generator generator(bindings(configs), store, clock_, params());
  auto result = generator.sweep(jobs, config_.workers);
  write_with(path(Artifact::Failures), [&](std::ostream& out) {
    for (const auto& f : result.failures) out << gen::to_json_line(f) << '\n';
  });
  note("generate: " + std::to_string(result.records.size()) + " records, " + std::to_string(result.cache_hits) +
       " cached, " + std::to_string(result.failures.size()) + " failed");
  return result;
}

ind::IndicatorTable Pipeline::evaluate() {
  const auto corpus = load_corpus();
  const auto targets = load_targets();
  const auto all = gen::load_records(require(Artifact::Records, "generate").string());
  std::set<std::string> wanted;
  for (const auto& c : configurations()) {
    for (const auto& t : targets) {
      wanted.insert(gen::record_cache_key(c.label, t.comment_id, config_.temperature, config_.max_tokens,
                                          derive_seed(config_.seed, c.label, t.comment_id)));
    }
  }
  std::vector<gen::GenerationRecord> records;
  for (const auto& r : all) {
    if (wanted.contains(r.cache_key())) records.push_back(r);
  }
  if (records.size() < wanted.size()) {
    note("evaluate: " + std::to_string(wanted.size() - records.size()) + " (config, target) pairs have no record");
  }
  ind::EvaluationOptions o;
  o.variant = config_.rouge;
  o.baseline = config_.baseline;
  o.workers = config_.workers;
  auto table = ind::evaluate_sweep(records, corpus, targets, scorer(), o);
  write_with(path(Artifact::Table), [&](std::ostream& out) { ind::write_table_csv(out, table.rows); });
  write_with(path(Artifact::Messages), [&](std::ostream& out) { ind::write_messages_csv(out, table.messages); });
  note("evaluate: " + std::to_string(table.rows.size()) + " configurations, " + std::to_string(table.messages.size()) +
       " messages");
  return table;
}

rank::SuperRanking Pipeline::rank() {
  auto in = open_in(require(Artifact::Table, "evaluate"));
  const auto rows = ind::read_table_csv(in);
  const auto rankings = rank::indicator_rankings(rows, {config_.baseline});
  const auto super = rank::aggregate_footrule(rankings);
  write_with(path(Artifact::SuperRanking), [&](std::ostream& out) { rank::write_super_ranking_csv(out, super); });
  write_with(path(Artifact::SuperRankingText), [&](std::ostream& out) {
    for (const auto& r : rankings) out << r.source << ": " << join(r.labels, " > ") << '\n';
    rank::write_super_ranking(out, super);
  });
  note("rank: footrule cost " + std::to_string(super.cost) + " over " + std::to_string(super.labels.size()) +
       " configurations");
  return super;
}

rank::SelectionResult Pipeline::pick() {
  auto sin = open_in(require(Artifact::SuperRanking, "rank"));
  const auto super = rank::read_super_ranking_csv(sin);
  auto min = open_in(require(Artifact::Messages, "evaluate"));
  const auto messages = ind::read_messages_csv(min);
  const auto corpus = load_corpus();
  const auto targets = load_targets();

  std::map<std::string, gen::Group> groups;
  for (const auto& label : super.labels) groups[label] = gen::parse_configuration(label).group();
  groups[config_.baseline] = gen::parse_configuration(config_.baseline).group();
  auto selection = rank::select_configurations(super, groups, config_.baseline);

  const auto records = gen::load_records(require(Artifact::Records, "generate").string());
  std::map<std::string, const gen::GenerationRecord*> by_message;
  for (const auto& r : records) by_message[ind::message_id(r.config, r.target_id)] = &r;
  std::map<std::string, const corpus::ToxicTarget*> target_by_id;
  for (const auto& t : targets) target_by_id[t.comment_id] = &t;
  const auto summaries = fs::exists(path(Artifact::Summaries))
                             ? std::make_unique<gen::SummaryCache>(path(Artifact::Summaries).string())
                             : std::make_unique<gen::SummaryCache>();

  survey::ItemBank bank;
  for (const auto& sc : selection.configs) {
    std::vector<ind::MessageIndicators> mine;
    for (const auto& m : messages) {
      if (m.config == sc.label) mine.push_back(m);
    }
    if (mine.empty()) throw PipelineError("no evaluated messages for selected configuration '" + sc.label + "'");
    auto reps = rank::select_representative(mine, config_.representatives);
    for (const auto& id : reps) {
      const auto rec = by_message.find(id);
      if (rec == by_message.end()) throw PipelineError("no generation record for message '" + id + "'");
      const auto& target = *target_by_id.at(rec->second->target_id);
      const auto& toxic = corpus.at(target.comment_id);
      survey::SurveyItem item;
      item.item_id = id;
      item.toxic = toxic.body;
      item.counterspeech = rec->second->counterspeech;
      item.config = sc.label;
      item.context.community = toxic.community;
      if (!target.parent_chain.empty()) item.context.previous_message = corpus.at(target.parent_chain.front()).body;
      std::vector<std::string> ids;
      for (const auto& [hid, body] : summary_source(corpus, target)) ids.push_back(hid);
      if (const auto s = summaries->find(toxic.author, ids)) item.context.user_summary = s->text;
      bank.add(std::move(item));
    }
    selection.representatives[sc.label] = std::move(reps);
  }
  write_with(path(Artifact::Selection), [&](std::ostream& out) { rank::write_selection_csv(out, selection); });
  write_with(path(Artifact::Representatives),
             [&](std::ostream& out) { rank::write_representatives_csv(out, selection); });
  bank.save(path(Artifact::SurveyItems).string());
  note("pick: " + join(selection.labels(), ", "));
  return selection;
}

std::unique_ptr<survey::SurveyService> Pipeline::survey_service() {
  auto in = open_in(require(Artifact::Selection, "pick"));
  const auto selection = rank::read_selection_csv(in);
  survey::SurveyConfig sc;
  sc.configs = selection.labels();
  sc.items_per_config = config_.items_per_config;
  sc.controls = survey::SurveyConfig::default_controls();
  sc.min_duration_seconds = config_.min_duration_seconds;
  sc.session_ttl_seconds = config_.session_ttl_seconds;
  sc.seed = derive_seed(config_.seed, "survey");
  auto bank = survey::ItemBank::load(require(Artifact::SurveyItems, "pick").string());
  return std::make_unique<survey::SurveyService>(sc, std::move(bank), system_clock(), path(Artifact::SurveyLog).string());
}

survey::RatingsExport Pipeline::survey_export(const survey::ExportFilter& filter) {
  require(Artifact::SurveyLog, "survey-serve");
  const auto service = survey_service();
  auto data = service->export_ratings(filter);
  write_with(path(Artifact::Ratings), [&](std::ostream& out) { ratings::write_ratings_csv(out, data.ratings); });
  const auto keys = survey::demographic_keys();
  write_with(path(Artifact::Demographics),
             [&](std::ostream& out) { ratings::write_demographics_csv(out, data.demographics, keys); });
  write_with(path(Artifact::Verdicts), [&](std::ostream& out) {
    write_csv_row(out, {"session", "pass", "reasons"});
    for (const auto& v : data.verdicts) {
      std::vector<std::string> reasons;
      for (auto r : v.reasons) reasons.emplace_back(survey::to_string(r));
      write_csv_row(out, {v.session, v.pass ? "true" : "false", join(reasons, ";")});
    }
  });
  note("survey export: " + std::to_string(data.demographics.size()) + " passing sessions of " +
       std::to_string(data.verdicts.size()));
  return data;
}

analysis::AnalysisReport Pipeline::analyze(const std::optional<std::pair<std::string, std::string>>& subgroup) {
  auto rin = open_in(require(Artifact::Ratings, "survey-serve --export"));
  auto rows = ratings::read_ratings_csv(rin);
  if (subgroup) {
    auto din = open_in(require(Artifact::Demographics, "survey-serve --export"));
    const auto demo = ratings::read_demographics_csv(din);
    rows = ratings::filter_by_demographic(rows, demo, subgroup->first, subgroup->second);
    if (rows.empty()) throw PipelineError("no ratings in subgroup " + subgroup->first + "=" + subgroup->second);
  }
  auto sin = open_in(require(Artifact::Selection, "pick"));
  const auto selection = rank::read_selection_csv(sin);
  auto tin = open_in(require(Artifact::Table, "evaluate"));
  const auto table = ind::read_table_csv(tin);

  analysis::AnalysisPlan plan;
  plan.baseline = config_.baseline;
  plan.configs = selection.labels();
  plan.bootstrap.resamples = config_.bootstrap_replicates;
  plan.bootstrap.seed = derive_seed(config_.seed, "analysis");
  plan.bootstrap.workers = config_.workers;
  const auto labels = selection.labels();
  const auto algo = analysis::algorithmic_ranking(table, labels);
  auto result = analysis::run_analysis(rows, plan, algo.labels);
  write_with(path(Artifact::Analysis), [&](std::ostream& out) { analysis::write_report_csv(out, result); });
  write_with(path(Artifact::AnalysisText), [&](std::ostream& out) { analysis::write_report_text(out, result); });
  write_with(path(Artifact::RankingComparison),
             [&](std::ostream& out) { report::write_ranking_comparison_csv(out, result.rankings); });
  note("analyze: " + std::to_string(result.rows.size()) + " tests");
  return result;
}

void Pipeline::report(const ReportOptions& options) {
  auto in = open_in(require(Artifact::Table, "evaluate"));
  const auto rows = ind::read_table_csv(in);
  if (options.table1) {
    write_with(path(Artifact::Table1), [&](std::ostream& out) { report::write_table1_csv(out, rows); });
  }
  const auto effects = report::factor_effects(rows, !options.allow_partial);
  write_with(path(Artifact::FactorEffects), [&](std::ostream& out) { report::write_factor_effects_csv(out, effects); });
  write_with(path(Artifact::FactorEffectsPlot),
             [&](std::ostream& out) { report::write_factor_effects_jsonl(out, effects); });
  if (fs::exists(path(Artifact::RankingComparison))) {
    auto rin = open_in(path(Artifact::RankingComparison));
    const auto cmp = report::read_ranking_comparison_csv(rin);
    write_with(path(Artifact::RankingPlot), [&](std::ostream& out) { report::write_ranking_comparison_jsonl(out, cmp); });
  }
  note("report: " + std::to_string(effects.size()) + " factor effects");
}

corpus::PairExport Pipeline::export_pairs(std::size_t n) {
  const auto corpus = load_corpus();
  return corpus::export_pairs_dataset(corpus, n, path(Artifact::Pairs).string(), derive_seed(config_.seed, "pairs"));
}

void Pipeline::run_offline() {
  ingest();
  select();
  summarize_users();
  generate();
  evaluate();
  rank();
  pick();
}

}  // namespace cspeech::pipeline
