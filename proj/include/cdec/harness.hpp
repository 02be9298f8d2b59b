#pragma once

// Experiment runner: config parsing, scorer construction, grid evaluation and
// JSON-lines result persistence. The CLI is a thin layer over this.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdec/aggregation.hpp"
#include "cdec/core_math.hpp"
#include "cdec/datasets.hpp"
#include "cdec/scorers.hpp"

namespace cdec {

// Scorer spec, one of:
//   {"kind":"ngram","order":5,"smoothing_k":0.1,"parameter_count":65.2,"corpus":{...}}
//   {"kind":"ngram_file","path":"expert.ngram"}
//   {"kind":"external","command":["prog","arg"],"timeout_ms":10000,"parameter_count":1.5}
//   {"kind":"negative_prompt","prefix":"..."}     (amateur only: the expert behind a prefix)
struct ScorerSpec {
  std::string kind = "ngram";
  NgramOptions ngram;
  CorpusSpec corpus;
  std::string path;
  std::vector<std::string> command;
  int timeout_ms = 10000;
  std::string prefix;
};

enum class Method { kGreedy, kCdGreedy, kSample, kMaskOnly, kCdSample };
std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct GridBlock {
  std::vector<Method> methods;
  std::vector<double> betas;  // empty: the configured cd.beta
  std::vector<int> k{1};
};

struct GridCell {
  Method method;
  double beta;
  int k;
};

struct DatasetSpec {
  CorpusSpec corpus{Generator::kArithmetic, 500, 7, 0.0};
  std::size_t shots = 8;
  std::string path;  // optional JSONL file; overrides the generator
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output = "results.jsonl";
  std::string vocabulary = "arithmetic";
  ScorerSpec expert;
  ScorerSpec amateur;
  CdConfig cd;
  bool mask_every_step = true;
  DatasetSpec dataset;
  int max_new_tokens = 10;
  AnswerPattern answer_pattern;
  std::vector<GridBlock> grid;

  // Fully resolved (defaults filled in) canonical JSON form.
  nlohmann::json to_json() const;
  std::vector<GridCell> cells() const;
};

// Strict parse: unknown keys and invalid values fail with kConfiguration and a
// message that starts with the field path (e.g. "cd.alpha: ...").
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Stable 64-bit FNV-1a of the resolved config, as 16 hex digits.
std::string config_fingerprint(const ExperimentConfig& config);

Vocabulary make_vocabulary(const std::string& name);

struct ScorerPair {
  Vocabulary vocab;
  ScorerPtr expert;
  ScorerPtr amateur;
};

ScorerPtr build_scorer(const ScorerSpec& spec, const Vocabulary& vocab, const std::string& role,
                       ScorerPtr expert = nullptr);
// Builds both scorers and rejects an incompatible pair before any decoding.
ScorerPair build_scorers(const ExperimentConfig& config);

struct ResultRow {
  std::string fingerprint;
  std::size_t cell = 0;
  std::string method;
  double beta = 0.0;
  int k = 1;
  std::string metric;
  std::optional<double> value;  // empty on failed rows
  std::string status = "ok";
  std::string error;
  double wall_clock_ms = 0.0;
  std::string engine_version;
  bool rerun = false;

  nlohmann::json to_json() const;
};

struct CellOutcome {
  GridCell cell;
  std::vector<ResultRow> rows;
  std::vector<std::string> gold;
  std::vector<std::vector<std::string>> path_texts;  // [problem][path]
  bool failed = false;
};

struct EvaluationSet {
  std::vector<ArithmeticProblem> shots;
  std::vector<ArithmeticProblem> targets;
};
EvaluationSet load_evaluation_set(const ExperimentConfig& config);

// Decodes every target under one grid cell. Problem i uses seed derive_seed(config.seed, i);
// its k paths are streams 0..k-1, so maj@1 equals single-path decoding.
CellOutcome evaluate_cell(const ExperimentConfig& config, const ScorerPair& scorers,
                          const EvaluationSet& data, const GridCell& cell, std::size_t cell_index,
                          const std::string& fingerprint);

struct RunOptions {
  std::size_t jobs = 1;
  std::optional<std::string> output;  // overrides config.output; "" disables writing
  // When set, every decoded path is appended here as a generation record line.
  std::string generations;
};

// Generation record line (read by `cdec analyze`):
//   {"schema_version":1,"prompt":..,"continuation":..,"gold":..,"method":..,"beta":..,"k":..}
// Only prompt and continuation are required.
struct GenerationLine {
  std::string prompt;
  std::string continuation;
  std::optional<std::string> gold;
  std::string method;
};
std::string format_generation_line(const GenerationLine& g, const nlohmann::json& extra = {});
GenerationLine parse_generation_line(std::string_view line);
std::vector<GenerationLine> read_generation_file(const std::string& path);

struct RunSummary {
  std::string fingerprint;
  std::vector<ResultRow> rows;
  bool any_failed = false;
};

// One row per grid cell per metric (accuracy, parseable_fraction, mean_chars), appended
// to the output file in grid order. Rows are marked rerun when the file already holds
// rows with the same fingerprint.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// {"method","beta","k","metric","value"} per row: the deterministic part of a run.
std::string metric_signature(const std::vector<ResultRow>& rows);

}  // namespace cdec
