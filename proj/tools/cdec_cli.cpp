// cdec: command-line front end for the contrastive-decoding engine.
//
// Exit codes: 0 ok, 1 usage/configuration, 2 data, 3 internal invariant.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdec/aggregation.hpp"
#include "cdec/analysis.hpp"
#include "cdec/datasets.hpp"
#include "cdec/decoding.hpp"
#include "cdec/error.hpp"
#include "cdec/harness.hpp"
#include "cdec/ranking.hpp"
#include "cdec/scorers.hpp"
#include "cdec/version.hpp"

namespace {

using cdec::ErrorKind;
using nlohmann::json;

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string output;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--config", o.config, "Experiment config (JSON)");
  cmd->add_option("--output", o.output, "Output file");
  cmd->add_flag("--json", o.json, "Machine-readable output");
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == 'n') {
      out += '\n';
      ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

std::ostream& output_stream(const std::string& path, std::ofstream& file, bool append = false) {
  if (path.empty()) return std::cout;
  file.open(path, append ? std::ios::app : std::ios::trunc);
  cdec::require(static_cast<bool>(file), ErrorKind::kData, "cannot open '" + path + "' for writing");
  return file;
}

// Scorers come from --config, or from --expert-model/--amateur-model n-gram files.
struct ScorerSource {
  std::string expert_model;
  std::string amateur_model;
  std::string negative_prefix;
};

void add_scorer_options(CLI::App* cmd, ScorerSource& s) {
  cmd->add_option("--expert-model", s.expert_model, "Expert n-gram model file");
  cmd->add_option("--amateur-model", s.amateur_model, "Amateur n-gram model file");
  cmd->add_option("--negative-prefix", s.negative_prefix,
                  "Use the expert behind this prefix as the amateur");
}

cdec::ScorerPair load_pair(const CommonOptions& common, const ScorerSource& src,
                           std::optional<cdec::ExperimentConfig>& config) {
  if (!common.config.empty()) {
    config = cdec::load_config(common.config);
    if (!src.negative_prefix.empty()) {
      config->amateur = cdec::ScorerSpec{};
      config->amateur.kind = "negative_prompt";
      config->amateur.prefix = unescape(src.negative_prefix);
    }
    return cdec::build_scorers(*config);
  }
  cdec::require(!src.expert_model.empty(), ErrorKind::kUsage,
                "either --config or --expert-model is required");
  auto expert = cdec::load_ngram(src.expert_model);
  cdec::Vocabulary vocab = expert->vocabulary();
  cdec::ScorerPtr amateur;
  if (!src.negative_prefix.empty()) {
    amateur = cdec::with_prefix(expert, cdec::make_prompt(vocab, unescape(src.negative_prefix)),
                                vocab.bos());
  } else if (!src.amateur_model.empty()) {
    amateur = cdec::load_ngram(src.amateur_model);
  }
  if (amateur) {
    const auto report = cdec::check_pair(expert->descriptor(), amateur->descriptor());
    cdec::require(report.ok, ErrorKind::kScorerCompatibility,
                  "expert/amateur pair rejected: " +
                      (report.reasons.empty() ? std::string() : report.reasons.front()));
  }
  return {std::move(vocab), expert, amateur};
}

struct CdFlags {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> temperature;
  std::optional<std::string> formulation;
};

void add_cd_options(CLI::App* cmd, CdFlags& f) {
  cmd->add_option("--alpha", f.alpha, "Alpha-mask threshold in (0, 1]");
  cmd->add_option("--beta", f.beta, "Amateur penalty strength >= 0");
  cmd->add_option("--temperature", f.temperature, "Output/sampling temperature");
  cmd->add_option("--formulation", f.formulation, "refactored | original")
      ->check(CLI::IsMember({"refactored", "original"}));
}

cdec::CdConfig resolve_cd(const std::optional<cdec::ExperimentConfig>& config, const CdFlags& f) {
  cdec::CdConfig cd = config ? config->cd : cdec::CdConfig{};
  if (f.alpha) cd.alpha = *f.alpha;
  if (f.beta) cd.beta = *f.beta;
  if (f.temperature) cd.output_temp = *f.temperature;
  if (f.formulation) {
    cd.formulation = *f.formulation == "original" ? cdec::Formulation::kOriginal
                                                  : cdec::Formulation::kRefactored;
  }
  cd.validate();
  return cd;
}

// --- decode ------------------------------------------------------------------

struct DecodeArgs {
  CommonOptions common;
  ScorerSource scorers;
  CdFlags cd;
  std::string prompt;
  std::string strategy = "greedy";
  int max_new_tokens = 16;
  int top_k = 40;
  double top_p = 0.9;
  bool stop_newline = false;
  std::string gold;
};

int run_decode(const DecodeArgs& a) {
  std::optional<cdec::ExperimentConfig> config;
  auto pair = load_pair(a.common, a.scorers, config);
  const auto cd = resolve_cd(config, a.cd);
  const double temperature = a.cd.temperature.value_or(config ? config->cd.output_temp : 1.0);

  cdec::DecodeRequest request;
  request.prompt = cdec::make_prompt(pair.vocab, unescape(a.prompt));
  request.max_new_tokens = a.max_new_tokens;
  request.seed = a.common.seed.value_or(config ? config->seed : 0);
  request.stop.insert(pair.vocab.eos());
  if (a.stop_newline) {
    if (auto nl = pair.vocab.find("\n")) request.stop.insert(*nl);
  }
  if (a.strategy == "greedy") {
    request.strategy = cdec::Greedy{};
  } else if (a.strategy == "sample") {
    request.strategy = cdec::Sample{temperature};
  } else if (a.strategy == "top_k") {
    request.strategy = cdec::TopK{a.top_k, temperature};
  } else if (a.strategy == "nucleus") {
    request.strategy = cdec::Nucleus{a.top_p, temperature};
  } else if (a.strategy == "cd_greedy") {
    request.strategy = cdec::CdGreedy{cd};
  } else {
    request.strategy = cdec::CdSample{cd, config ? config->mask_every_step : true};
  }
  if (cdec::needs_amateur(request.strategy)) {
    cdec::require(pair.amateur != nullptr, ErrorKind::kUsage,
                  "strategy " + a.strategy + " needs an amateur (--amateur-model or --negative-prefix)");
  }
  const auto record = cdec::decode(*pair.expert, pair.amateur.get(), request);
  const std::string text = pair.vocab.decode(record.continuation.ids);

  if (!a.common.output.empty()) {
    std::ofstream file;
    auto& out = output_stream(a.common.output, file, true);
    cdec::GenerationLine g{unescape(a.prompt), text,
                           a.gold.empty() ? std::nullopt : std::optional<std::string>(a.gold),
                           cdec::strategy_name(request.strategy)};
    out << cdec::format_generation_line(g) << '\n';
  }
  if (a.common.json) {
    json steps = json::array();
    for (const auto& s : record.per_step) {
      steps.push_back({{"token", s.chosen}, {"valid_size", s.valid_size}, {"score", s.score}});
    }
    json j = {{"strategy", cdec::strategy_name(request.strategy)},
              {"seed", request.seed},
              {"continuation", text},
              {"token_ids", record.continuation.ids},
              {"finish_reason", std::string(cdec::to_string(record.finish_reason))},
              {"per_step", steps}};
    std::cout << j.dump() << '\n';
  } else {
    std::cout << "continuation: " << json(text).dump() << '\n';
    std::cout << "finish_reason: " << cdec::to_string(record.finish_reason) << '\n';
    std::cout << "step\ttoken\tvalid\tscore\n";
    for (std::size_t i = 0; i < record.per_step.size(); ++i) {
      const auto& s = record.per_step[i];
      std::cout << i << '\t' << json(pair.vocab.token(s.chosen)).dump() << '\t' << s.valid_size
                << '\t' << s.score << '\n';
    }
  }
  return 0;
}

// --- rank --------------------------------------------------------------------

struct RankArgs {
  CommonOptions common;
  ScorerSource scorers;
  CdFlags cd;
  std::string tasks;
  std::string length_basis = "characters";
  bool no_mask = false;
};

int run_rank(const RankArgs& a) {
  std::optional<cdec::ExperimentConfig> config;
  auto pair = load_pair(a.common, a.scorers, config);
  cdec::require(pair.amateur != nullptr, ErrorKind::kUsage, "rank needs an amateur scorer");
  const auto cd = resolve_cd(config, a.cd);
  cdec::RankOptions options{cdec::length_basis_from_string(a.length_basis),
                            a.no_mask ? cdec::MaskPolicy::kNoMask : cdec::MaskPolicy::kMask};
  const auto records = cdec::read_task_file(a.tasks);
  cdec::require(!records.empty(), ErrorKind::kData, "task file is empty");

  std::ofstream file;
  auto& out = output_stream(a.common.output, file);
  std::size_t correct = 0;
  std::size_t with_gold = 0;
  for (std::size_t t = 0; t < records.size(); ++t) {
    const auto task = cdec::to_choice_task(records[t], pair.vocab);
    const auto result = cdec::rank_task(*pair.expert, *pair.amateur, pair.vocab, task, cd, options);
    if (task.gold_index) {
      ++with_gold;
      correct += result.correct ? 1 : 0;
    }
    if (a.common.json) {
      json ranking = json::array();
      for (const auto& c : result.ranking) {
        ranking.push_back({{"index", c.index},
                           {"raw_score", std::isfinite(c.raw_score) ? json(c.raw_score) : json(nullptr)},
                           {"normalized_score", std::isfinite(c.normalized_score)
                                                    ? json(c.normalized_score)
                                                    : json(nullptr)}});
      }
      out << json{{"task", t}, {"ranking", ranking}, {"correct", result.correct}}.dump() << '\n';
    }
  }
  const double accuracy = with_gold == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(with_gold);
  if (a.common.json) {
    out << json{{"tasks", records.size()}, {"accuracy", accuracy}, {"beta", cd.beta},
                {"alpha", cd.alpha}, {"length_basis", a.length_basis}}
               .dump()
        << '\n';
  } else {
    out << "tasks: " << records.size() << "\naccuracy: " << accuracy << '\n';
  }
  return 0;
}

// --- run / selfcons ----------------------------------------------------------

struct RunArgs {
  CommonOptions common;
  std::size_t jobs = 1;
  std::string generations;
  std::vector<int> k;
  std::vector<std::string> methods;
};

int print_summary(const cdec::RunSummary& summary, bool as_json) {
  for (const auto& r : summary.rows) {
    if (as_json) {
      std::cout << r.to_json().dump() << '\n';
    } else {
      std::cout << r.method << "\tbeta=" << r.beta << "\tk=" << r.k << '\t' << r.metric << '\t'
                << (r.value ? std::to_string(*r.value) : "FAILED: " + r.error) << '\n';
    }
  }
  return summary.any_failed ? 2 : 0;
}

int run_run(const RunArgs& a, bool selfcons) {
  cdec::require(!a.common.config.empty(), ErrorKind::kUsage, "--config is required");
  auto config = cdec::load_config(a.common.config);
  if (a.common.seed) config.seed = *a.common.seed;
  if (selfcons) {
    cdec::GridBlock block;
    const std::vector<std::string> methods =
        a.methods.empty() ? std::vector<std::string>{"sample", "mask_only", "cd_sample"} : a.methods;
    for (const auto& m : methods) block.methods.push_back(cdec::method_from_string(m));
    block.k = a.k.empty() ? std::vector<int>{1, 5, 10, 20} : a.k;
    config.grid = {block};
  }
  cdec::RunOptions options;
  options.jobs = a.jobs;
  if (!a.common.output.empty()) options.output = a.common.output;
  options.generations = a.generations;
  return print_summary(cdec::run_experiment(config, options), a.common.json);
}

// --- gen-data ----------------------------------------------------------------

struct GenDataArgs {
  CommonOptions common;
  std::optional<std::size_t> size;
  std::optional<double> corruption;
};

int run_gen_data(const GenDataArgs& a) {
  cdec::CorpusSpec spec;
  if (!a.common.config.empty()) spec = cdec::load_config(a.common.config).dataset.corpus;
  if (a.size) spec.size = *a.size;
  if (a.corruption) spec.corruption = *a.corruption;
  if (a.common.seed) spec.seed = *a.common.seed;
  const auto problems = cdec::gen_arithmetic(spec);
  std::ofstream file;
  auto& out = output_stream(a.common.output, file);
  for (const auto& p : problems) out << cdec::format_problem_line(p) << '\n';
  if (!a.common.output.empty() && !a.common.json) {
    std::cerr << "wrote " << problems.size() << " problems to " << a.common.output << '\n';
  }
  return 0;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
  CommonOptions common;
  std::string input;
  std::vector<int> n{1, 2, 3, 4};
  std::string vocabulary = "arithmetic";
  std::string overlap = "distinct";
};

int run_analyze(const AnalyzeArgs& a) {
  const auto lines = cdec::read_generation_file(a.input);
  cdec::require(!lines.empty(), ErrorKind::kData, "generations file is empty");
  const auto vocab = cdec::make_vocabulary(
      a.common.config.empty() ? a.vocabulary : cdec::load_config(a.common.config).vocabulary);
  const auto mode = a.overlap == "multiset" ? cdec::OverlapMode::kMultiset : cdec::OverlapMode::kDistinct;

  std::map<std::string, std::vector<const cdec::GenerationLine*>> groups;
  for (const auto& g : lines) groups[g.method.empty() ? "all" : g.method].push_back(&g);

  json report = json::object();
  for (const auto& [method, group] : groups) {
    json entry;
    json copy = json::array();
    for (int n : a.n) {
      double p = 0.0, r = 0.0, f = 0.0;
      std::size_t used = 0;
      for (const auto* g : group) {
        const auto prompt = vocab.encode(g->prompt);
        const auto gen = vocab.encode(g->continuation);
        if (prompt.size() < static_cast<std::size_t>(n) || gen.size() < static_cast<std::size_t>(n)) continue;
        const auto m = cdec::copy_metrics(prompt, gen, n, mode);
        p += m.precision;
        r += m.recall;
        f += m.f1;
        ++used;
      }
      const double d = used == 0 ? 1.0 : static_cast<double>(used);
      copy.push_back({{"n", n}, {"precision", p / d}, {"recall", r / d}, {"f1", f / d}, {"records", used}});
    }
    entry["copy"] = copy;
    std::vector<std::string> texts;
    std::vector<std::string> gold;
    bool all_gold = true;
    for (const auto* g : group) {
      texts.push_back(g->continuation);
      all_gold = all_gold && g->gold.has_value();
      gold.push_back(g->gold.value_or(""));
    }
    if (all_gold) {
      entry["stats"] = cdec::to_json(cdec::generation_stats_text(texts, cdec::AnswerPattern::last_number(), gold));
    }
    report[method] = entry;
  }
  std::ofstream file;
  auto& out = output_stream(a.common.output, file);
  out << (a.common.json ? report.dump() : report.dump(2)) << '\n';
  return 0;
}

// --- flops -------------------------------------------------------------------

struct FlopsArgs {
  CommonOptions common;
  std::optional<double> expert;
  std::optional<double> amateur;
  double length_ratio = 1.0;
  int k_max = 0;
};

int run_flops(const FlopsArgs& a) {
  double expert = a.expert.value_or(0.0);
  double amateur = a.amateur.value_or(0.0);
  if (!a.common.config.empty()) {
    const auto config = cdec::load_config(a.common.config);
    if (!a.expert) expert = config.expert.ngram.parameter_count;
    if (!a.amateur) amateur = config.amateur.ngram.parameter_count;
  }
  cdec::require(a.expert || !a.common.config.empty(), ErrorKind::kUsage, "--expert is required");
  const auto report = cdec::flop_overhead(expert, amateur, a.length_ratio);
  std::ofstream file;
  auto& out = output_stream(a.common.output, file);
  if (a.k_max > 0) {
    std::vector<cdec::CostPoint> points;
    for (int k = 1; k <= a.k_max; ++k) {
      auto p = cdec::self_consistency_cost(k, report);
      points.insert(points.end(), p.begin(), p.end());
    }
    out << cdec::cost_curve_csv(points);
    return 0;
  }
  if (a.common.json) {
    out << cdec::to_json(report).dump() << '\n';
  } else {
    out << "per-token overhead: " << percent(report.per_token_overhead) << '\n'
        << "total overhead: " << percent(report.total_overhead) << '\n';
  }
  return 0;
}

// --- train-scorer ------------------------------------------------------------

struct TrainArgs {
  CommonOptions common;
  std::string corpus_file;
  std::string vocabulary = "arithmetic";
  std::size_t arithmetic_size = 2000;
  double corruption = 0.0;
  int order = 3;
  double smoothing_k = 0.1;
  double parameter_count = 0.0;
  std::string role = "expert";
};

int run_train(const TrainArgs& a) {
  cdec::require(!a.common.output.empty(), ErrorKind::kUsage, "--output is required");
  std::shared_ptr<const cdec::NgramScorer> model;
  if (!a.common.config.empty()) {
    const auto config = cdec::load_config(a.common.config);
    const auto& spec = a.role == "amateur" ? config.amateur : config.expert;
    cdec::require(spec.kind == "ngram", ErrorKind::kUsage,
                  a.role + " in the config is not an n-gram spec");
    auto scorer = cdec::build_scorer(spec, cdec::make_vocabulary(config.vocabulary), a.role);
    model = std::dynamic_pointer_cast<const cdec::NgramScorer>(scorer);
  } else {
    const auto vocab = cdec::make_vocabulary(a.vocabulary);
    std::vector<cdec::TokenSequence> corpus;
    if (!a.corpus_file.empty()) {
      std::ifstream in(a.corpus_file);
      cdec::require(static_cast<bool>(in), ErrorKind::kData, "cannot open corpus '" + a.corpus_file + "'");
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty()) corpus.push_back(cdec::make_prompt(vocab, line));
      }
    } else {
      cdec::CorpusSpec spec;
      spec.size = a.arithmetic_size;
      spec.seed = a.common.seed.value_or(0);
      spec.corruption = a.corruption;
      if (a.vocabulary == "template-text") {
        spec.generator = cdec::Generator::kTemplateText;
        for (const auto& line : cdec::gen_template_text(spec)) corpus.push_back(cdec::make_prompt(vocab, line));
      } else {
        corpus = cdec::arithmetic_corpus(vocab, cdec::gen_arithmetic(spec));
      }
    }
    model = cdec::train_ngram(vocab, corpus, {a.order, a.smoothing_k, a.parameter_count});
  }
  cdec::save_ngram(*model, a.common.output);
  if (a.common.json) {
    std::cout << json{{"output", a.common.output}, {"order", model->order()},
                      {"smoothing_k", model->smoothing_k()}, {"vocab_id", model->vocabulary().id()}}
                     .dump()
              << '\n';
  } else {
    std::cout << "wrote order-" << model->order() << " model to " << a.common.output << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cdec: contrastive decoding engine and experiment harness"};
  app.set_version_flag("--version", cdec::kEngineVersion);
  app.require_subcommand(1);

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "One-off generation with per-step diagnostics");
  add_common(decode, decode_args.common);
  add_scorer_options(decode, decode_args.scorers);
  add_cd_options(decode, decode_args.cd);
  decode->add_option("--prompt", decode_args.prompt, "Prompt text (\\n for newline)")->required();
  decode->add_option("--strategy", decode_args.strategy)
      ->check(CLI::IsMember({"greedy", "sample", "top_k", "nucleus", "cd_greedy", "cd_sample"}));
  decode->add_option("--max-new-tokens", decode_args.max_new_tokens);
  decode->add_option("--top-k", decode_args.top_k);
  decode->add_option("--top-p", decode_args.top_p);
  decode->add_flag("--stop-newline", decode_args.stop_newline, "Stop at the first newline");
  decode->add_option("--gold", decode_args.gold, "Gold answer recorded with --output");

  RankArgs rank_args;
  auto* rank = app.add_subcommand("rank", "Rank multiple-choice tasks from a JSONL task file");
  add_common(rank, rank_args.common);
  add_scorer_options(rank, rank_args.scorers);
  add_cd_options(rank, rank_args.cd);
  rank->add_option("--tasks", rank_args.tasks, "Task file (JSON lines)")->required();
  rank->add_option("--length-basis", rank_args.length_basis)
      ->check(CLI::IsMember({"characters", "tokens", "none"}));
  rank->add_flag("--no-mask", rank_args.no_mask, "Skip the alpha mask while scoring");

  RunArgs selfcons_args;
  auto* selfcons = app.add_subcommand("selfcons", "Self-consistency maj@k grid");
  add_common(selfcons, selfcons_args.common);
  selfcons->add_option("--jobs", selfcons_args.jobs);
  selfcons->add_option("--k", selfcons_args.k, "k values (default 1 5 10 20)");
  selfcons->add_option("--methods", selfcons_args.methods, "sample mask_only cd_sample ...");
  selfcons->add_option("--generations", selfcons_args.generations, "Append every path here");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the grid of an experiment config");
  add_common(run, run_args.common);
  run->add_option("--jobs", run_args.jobs);
  run->add_option("--generations", run_args.generations, "Append every path here");

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic arithmetic dataset");
  add_common(gen, gen_args.common);
  gen->add_option("--size", gen_args.size);
  gen->add_option("--corruption", gen_args.corruption);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Copy metrics and generation statistics");
  add_common(analyze, analyze_args.common);
  analyze->add_option("--input", analyze_args.input, "Generations file (JSON lines)")->required();
  analyze->add_option("--n", analyze_args.n, "n-gram orders");
  analyze->add_option("--vocabulary", analyze_args.vocabulary)
      ->check(CLI::IsMember({"arithmetic", "template-text"}));
  analyze->add_option("--overlap", analyze_args.overlap)->check(CLI::IsMember({"distinct", "multiset"}));

  FlopsArgs flops_args;
  auto* flops = app.add_subcommand("flops", "FLOP overhead of adding the amateur");
  add_common(flops, flops_args.common);
  flops->add_option("--expert", flops_args.expert, "Expert parameters (billions)");
  flops->add_option("--amateur", flops_args.amateur, "Amateur parameters (billions)");
  flops->add_option("--length-ratio", flops_args.length_ratio, "CD / baseline generation length");
  flops->add_option("--k-max", flops_args.k_max, "Emit the self-consistency cost curve as CSV");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train-scorer", "Train and save an n-gram scorer");
  add_common(train, train_args.common);
  train->add_option("--corpus", train_args.corpus_file, "Text corpus, one sequence per line");
  train->add_option("--vocabulary", train_args.vocabulary)
      ->check(CLI::IsMember({"arithmetic", "template-text"}));
  train->add_option("--arithmetic-size", train_args.arithmetic_size);
  train->add_option("--corruption", train_args.corruption);
  train->add_option("--order", train_args.order);
  train->add_option("--smoothing-k", train_args.smoothing_k);
  train->add_option("--parameter-count", train_args.parameter_count);
  train->add_option("--role", train_args.role, "Config scorer to train")
      ->check(CLI::IsMember({"expert", "amateur"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*decode) return run_decode(decode_args);
    if (*rank) return run_rank(rank_args);
    if (*selfcons) return run_run(selfcons_args, true);
    if (*run) return run_run(run_args, false);
    if (*gen) return run_gen_data(gen_args);
    if (*analyze) return run_analyze(analyze_args);
    if (*flops) return run_flops(flops_args);
    if (*train) return run_train(train_args);
  } catch (const cdec::Error& e) {
    std::cerr << "error (" << cdec::to_string(e.kind()) << "): " << e.what() << '\n';
    return cdec::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
