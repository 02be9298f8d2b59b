#include "cdec/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "cdec/decoding.hpp"
#include "cdec/error.hpp"
#include "cdec/external_scorer.hpp"
#include "cdec/rng.hpp"
#include "cdec/version.hpp"

namespace cdec {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
  fail(ErrorKind::kConfiguration, path + ": " + message);
}

// Strict object reader: every key must be consumed or listed as allowed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_.empty() ? "<root>" : path_, "must be an object");
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) config_error(child(key), "unknown key");
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    try {
      return j_[key].get<T>();
    } catch (const json::exception&) {
      config_error(child(key), "has the wrong type");
    }
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_number()) config_error(child(key), "must be a number");
    return j_[key].get<double>();
  }

 private:
  const json& j_;
  std::string path_;
};

CorpusSpec parse_corpus(const json& j, const std::string& path, CorpusSpec defaults) {
  ObjectReader r(j, path, {"generator", "size", "seed", "corruption"});
  CorpusSpec spec = defaults;
  const auto gen = r.get<std::string>("generator", spec.generator == Generator::kArithmetic
                                                       ? "arithmetic"
                                                       : "template-text");
  if (gen == "arithmetic") {
    spec.generator = Generator::kArithmetic;
  } else if (gen == "template-text") {
    spec.generator = Generator::kTemplateText;
  } else {
    config_error(r.child("generator"), "must be 'arithmetic' or 'template-text'");
  }
  const auto size = r.get<std::int64_t>("size", static_cast<std::int64_t>(spec.size));
  if (size < 1) config_error(r.child("size"), "must be >= 1");
  spec.size = static_cast<std::size_t>(size);
  spec.seed = r.get<std::uint64_t>("seed", spec.seed);
  spec.corruption = r.number("corruption", spec.corruption);
  if (!(spec.corruption >= 0.0 && spec.corruption <= 1.0)) {
    config_error(r.child("corruption"), "must be in [0, 1]");
  }
  return spec;
}

json corpus_json(const CorpusSpec& c) {
  return {{"generator", c.generator == Generator::kArithmetic ? "arithmetic" : "template-text"},
          {"size", c.size},
          {"seed", c.seed},
          {"corruption", c.corruption}};
}

ScorerSpec parse_scorer(const json& j, const std::string& path, bool amateur) {
  if (!j.is_object()) config_error(path, "must be an object");
  ScorerSpec spec;
  spec.kind = j.value("kind", std::string("ngram"));
  if (spec.kind == "ngram") {
    ObjectReader r(j, path, {"kind", "order", "smoothing_k", "parameter_count", "corpus"});
    spec.ngram.order = r.get<int>("order", 3);
    if (spec.ngram.order < 1 || spec.ngram.order > 5) config_error(r.child("order"), "must be in [1, 5]");
    spec.ngram.smoothing_k = r.number("smoothing_k", 0.1);
    if (!(spec.ngram.smoothing_k > 0.0)) config_error(r.child("smoothing_k"), "must be > 0");
    spec.ngram.parameter_count = r.number("parameter_count", 0.0);
    if (!(spec.ngram.parameter_count >= 0.0)) config_error(r.child("parameter_count"), "must be >= 0");
    if (!r.has("corpus")) config_error(r.child("corpus"), "is required for kind 'ngram'");
    spec.corpus = parse_corpus(r.raw("corpus"), r.child("corpus"), CorpusSpec{});
  } else if (spec.kind == "ngram_file") {
    ObjectReader r(j, path, {"kind", "path"});
    spec.path = r.get<std::string>("path", "");
    if (spec.path.empty()) config_error(r.child("path"), "is required");
    if (!std::filesystem::exists(spec.path)) config_error(r.child("path"), "file does not exist");
  } else if (spec.kind == "external") {
    ObjectReader r(j, path, {"kind", "command", "timeout_ms", "parameter_count"});
    spec.command = r.get<std::vector<std::string>>("command", {});
    if (spec.command.empty()) config_error(r.child("command"), "must be a non-empty array");
    spec.timeout_ms = r.get<int>("timeout_ms", 10000);
    if (spec.timeout_ms <= 0) config_error(r.child("timeout_ms"), "must be > 0");
    spec.ngram.parameter_count = r.number("parameter_count", 0.0);
    if (!(spec.ngram.parameter_count >= 0.0)) config_error(r.child("parameter_count"), "must be >= 0");
  } else if (spec.kind == "negative_prompt") {
    if (!amateur) config_error(path + ".kind", "'negative_prompt' is only valid for the amateur");
    ObjectReader r(j, path, {"kind", "prefix"});
    spec.prefix = r.get<std::string>("prefix", "");
  } else {
    config_error(path + ".kind", "unknown scorer kind '" + spec.kind + "'");
  }
  return spec;
}

json scorer_json(const ScorerSpec& s) {
  if (s.kind == "ngram") {
    return {{"kind", s.kind},
            {"order", s.ngram.order},
            {"smoothing_k", s.ngram.smoothing_k},
            {"parameter_count", s.ngram.parameter_count},
            {"corpus", corpus_json(s.corpus)}};
  }
  if (s.kind == "ngram_file") return {{"kind", s.kind}, {"path", s.path}};
  if (s.kind == "external") {
    return {{"kind", s.kind},
            {"command", s.command},
            {"timeout_ms", s.timeout_ms},
            {"parameter_count", s.ngram.parameter_count}};
  }
  return {{"kind", s.kind}, {"prefix", s.prefix}};
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// --- methods / config ------------------------------------------------------

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kGreedy: return "greedy";
    case Method::kCdGreedy: return "cd_greedy";
    case Method::kSample: return "sample";
    case Method::kMaskOnly: return "mask_only";
    case Method::kCdSample: return "cd_sample";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::kGreedy, Method::kCdGreedy, Method::kSample, Method::kMaskOnly,
                   Method::kCdSample}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorKind::kConfiguration, "unknown method '" + std::string(name) + "'");
}

ExperimentConfig parse_config(const json& j) {
  ObjectReader root(j, "", {"schema_version", "seed", "output", "vocabulary", "expert", "amateur",
                            "cd", "dataset", "decode", "grid"});
  if (root.get<int>("schema_version", kSchemaVersion) != kSchemaVersion) {
    config_error("schema_version", "unsupported version");
  }
  ExperimentConfig c;
  c.seed = root.get<std::uint64_t>("seed", 0);
  c.output = root.get<std::string>("output", c.output);
  c.vocabulary = root.get<std::string>("vocabulary", c.vocabulary);
  if (c.vocabulary != "arithmetic" && c.vocabulary != "template-text") {
    config_error("vocabulary", "must be 'arithmetic' or 'template-text'");
  }
  if (!root.has("expert")) config_error("expert", "is required");
  if (!root.has("amateur")) config_error("amateur", "is required");
  c.expert = parse_scorer(root.raw("expert"), "expert", false);
  c.amateur = parse_scorer(root.raw("amateur"), "amateur", true);

  if (root.has("cd")) {
    ObjectReader r(root.raw("cd"), "cd",
                   {"alpha", "beta", "expert_temp", "amateur_temp", "output_temp", "formulation",
                    "mask_every_step"});
    c.cd.alpha = r.number("alpha", c.cd.alpha);
    if (!(c.cd.alpha > 0.0 && c.cd.alpha <= 1.0)) config_error("cd.alpha", "must be in (0, 1]");
    c.cd.beta = r.number("beta", c.cd.beta);
    if (!(c.cd.beta >= 0.0)) config_error("cd.beta", "must be >= 0");
    c.cd.expert_temp = r.number("expert_temp", c.cd.expert_temp);
    c.cd.amateur_temp = r.number("amateur_temp", c.cd.amateur_temp);
    c.cd.output_temp = r.number("output_temp", c.cd.output_temp);
    for (auto [name, v] : {std::pair{"expert_temp", c.cd.expert_temp},
                           std::pair{"amateur_temp", c.cd.amateur_temp},
                           std::pair{"output_temp", c.cd.output_temp}}) {
      if (!(v > 0.0)) config_error(std::string("cd.") + name, "must be > 0");
    }
    const auto f = r.get<std::string>("formulation", "refactored");
    if (f == "refactored") {
      c.cd.formulation = Formulation::kRefactored;
    } else if (f == "original") {
      c.cd.formulation = Formulation::kOriginal;
    } else {
      config_error("cd.formulation", "must be 'refactored' or 'original'");
    }
    c.mask_every_step = r.get<bool>("mask_every_step", true);
  }
  c.cd.seed = c.seed;

  if (root.has("dataset")) {
    ObjectReader r(root.raw("dataset"), "dataset",
                   {"generator", "size", "seed", "corruption", "shots", "path"});
    json corpus = json::object();
    for (const char* key : {"generator", "size", "seed", "corruption"}) {
      if (r.has(key)) corpus[key] = r.raw(key);
    }
    c.dataset.corpus = parse_corpus(corpus, "dataset", c.dataset.corpus);
    if (c.dataset.corpus.generator != Generator::kArithmetic) {
      config_error("dataset.generator", "evaluation datasets must be 'arithmetic'");
    }
    const auto shots = r.get<std::int64_t>("shots", 8);
    if (shots < 0) config_error("dataset.shots", "must be >= 0");
    c.dataset.shots = static_cast<std::size_t>(shots);
    c.dataset.path = r.get<std::string>("path", "");
    if (!c.dataset.path.empty() && !std::filesystem::exists(c.dataset.path)) {
      config_error("dataset.path", "file does not exist");
    }
  }

  if (root.has("decode")) {
    ObjectReader r(root.raw("decode"), "decode", {"max_new_tokens", "answer_pattern", "marker"});
    c.max_new_tokens = r.get<int>("max_new_tokens", c.max_new_tokens);
    if (c.max_new_tokens < 1) config_error("decode.max_new_tokens", "must be >= 1");
    const auto pattern = r.get<std::string>("answer_pattern", "last-number");
    if (pattern == "last-number") {
      c.answer_pattern = AnswerPattern::last_number();
    } else if (pattern == "after-marker") {
      const auto marker = r.get<std::string>("marker", "");
      if (marker.empty()) config_error("decode.marker", "is required for 'after-marker'");
      c.answer_pattern = AnswerPattern::after_marker(marker);
    } else {
      config_error("decode.answer_pattern", "must be 'last-number' or 'after-marker'");
    }
  }

  if (!root.has("grid") || !root.raw("grid").is_array() || root.raw("grid").empty()) {
    config_error("grid", "must be a non-empty array");
  }
  const auto& grid = root.raw("grid");
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const std::string path = "grid[" + std::to_string(b) + "]";
    ObjectReader r(grid[b], path, {"methods", "betas", "k"});
    GridBlock block;
    const auto methods = r.get<std::vector<std::string>>("methods", {});
    if (methods.empty()) config_error(path + ".methods", "must be a non-empty array");
    for (const auto& m : methods) {
      try {
        block.methods.push_back(method_from_string(m));
      } catch (const Error&) {
        config_error(path + ".methods", "unknown method '" + m + "'");
      }
    }
    block.betas = r.get<std::vector<double>>("betas", {});
    for (double beta : block.betas) {
      if (!(beta >= 0.0)) config_error(path + ".betas", "entries must be >= 0");
    }
    block.k = r.get<std::vector<int>>("k", {1});
    if (block.k.empty()) config_error(path + ".k", "must be non-empty");
    for (int k : block.k) {
      if (k < 1) config_error(path + ".k", "entries must be >= 1");
    }
    c.grid.push_back(std::move(block));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kUsage, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfiguration, path + ": not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = seed;
  j["output"] = output;
  j["vocabulary"] = vocabulary;
  j["expert"] = scorer_json(expert);
  j["amateur"] = scorer_json(amateur);
  j["cd"] = {{"alpha", cd.alpha},
             {"beta", cd.beta},
             {"expert_temp", cd.expert_temp},
             {"amateur_temp", cd.amateur_temp},
             {"output_temp", cd.output_temp},
             {"formulation", cd.formulation == Formulation::kOriginal ? "original" : "refactored"},
             {"mask_every_step", mask_every_step}};
  auto dataset_json = corpus_json(dataset.corpus);
  dataset_json["shots"] = dataset.shots;
  dataset_json["path"] = dataset.path;
  j["dataset"] = dataset_json;
  j["decode"] = {{"max_new_tokens", max_new_tokens},
                 {"answer_pattern", answer_pattern.kind == AnswerPattern::Kind::kLastNumber
                                        ? "last-number"
                                        : "after-marker"},
                 {"marker", answer_pattern.marker}};
  json grid_json = json::array();
  for (const auto& b : grid) {
    json methods = json::array();
    for (auto m : b.methods) methods.push_back(std::string(to_string(m)));
    grid_json.push_back({{"methods", methods}, {"betas", b.betas}, {"k", b.k}});
  }
  j["grid"] = grid_json;
  return j;
}

std::vector<GridCell> ExperimentConfig::cells() const {
  std::vector<GridCell> out;
  for (const auto& block : grid) {
    const std::vector<double> betas = block.betas.empty() ? std::vector<double>{cd.beta} : block.betas;
    for (Method m : block.methods) {
      // Only the CD methods apply the amateur penalty; the rest record beta = 0.
      const bool penalized = m == Method::kCdGreedy || m == Method::kCdSample;
      const auto used = penalized ? betas : std::vector<double>{0.0};
      for (double beta : used) {
        for (int k : block.k) out.push_back({m, beta, k});
      }
    }
  }
  return out;
}

std::string config_fingerprint(const ExperimentConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- scorers ---------------------------------------------------------------

Vocabulary make_vocabulary(const std::string& name) {
  if (name == "arithmetic") return Vocabulary::arithmetic();
  if (name == "template-text") return template_text_vocabulary();
  fail(ErrorKind::kConfiguration, "vocabulary: unknown vocabulary '" + name + "'");
}

ScorerPtr build_scorer(const ScorerSpec& spec, const Vocabulary& vocab, const std::string& role,
                       ScorerPtr expert) {
  if (spec.kind == "ngram") {
    std::vector<TokenSequence> corpus;
    if (spec.corpus.generator == Generator::kArithmetic) {
      require(vocab.id() == Vocabulary::arithmetic().id(), ErrorKind::kConfiguration,
              role + ".corpus.generator: arithmetic corpora need the arithmetic vocabulary");
      corpus = arithmetic_corpus(vocab, gen_arithmetic(spec.corpus));
    } else {
      for (const auto& line : gen_template_text(spec.corpus)) corpus.push_back(make_prompt(vocab, line));
    }
    return train_ngram(vocab, corpus, spec.ngram);
  }
  if (spec.kind == "ngram_file") return load_ngram(spec.path);
  if (spec.kind == "external") {
    ExternalScorerOptions options;
    options.command = spec.command;
    options.timeout = std::chrono::milliseconds(spec.timeout_ms);
    options.parameter_count = spec.ngram.parameter_count;
    return std::make_shared<const ExternalScorer>(std::move(options));
  }
  if (spec.kind == "negative_prompt") {
    require(expert != nullptr, ErrorKind::kConfiguration,
            role + ": negative_prompt needs an expert to wrap");
    return with_prefix(expert, make_prompt(vocab, spec.prefix), vocab.bos());
  }
  fail(ErrorKind::kConfiguration, role + ".kind: unknown scorer kind '" + spec.kind + "'");
}

ScorerPair build_scorers(const ExperimentConfig& config) {
  Vocabulary vocab = make_vocabulary(config.vocabulary);
  auto expert = build_scorer(config.expert, vocab, "expert");
  auto amateur = build_scorer(config.amateur, vocab, "amateur", expert);
  const auto report = check_pair(expert->descriptor(), amateur->descriptor());
  std::string why;
  for (const auto& r : report.reasons) why += (why.empty() ? "" : "; ") + r;
  require(report.ok, ErrorKind::kScorerCompatibility, "expert/amateur pair rejected: " + why);
  for (const auto* s : {expert.get(), amateur.get()}) {
    const auto& d = s->descriptor();
    require(d.vocab_id == vocab.id() && d.vocab_size == vocab.size(),
            ErrorKind::kScorerCompatibility,
            "scorer vocabulary '" + d.vocab_id + "' (" + std::to_string(d.vocab_size) +
                " tokens) does not match configured vocabulary '" + vocab.id() + "' (" +
                std::to_string(vocab.size()) + " tokens)");
  }
  return {std::move(vocab), std::move(expert), std::move(amateur)};
}

// --- evaluation ------------------------------------------------------------

json ResultRow::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["fingerprint"] = fingerprint;
  j["cell"] = cell;
  j["method"] = method;
  j["beta"] = beta;
  j["k"] = k;
  j["metric"] = metric;
  j["value"] = value ? json(*value) : json(nullptr);
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["wall_clock_ms"] = wall_clock_ms;
  j["engine_version"] = engine_version;
  j["rerun"] = rerun;
  return j;
}

EvaluationSet load_evaluation_set(const ExperimentConfig& config) {
  std::vector<ArithmeticProblem> all;
  const auto& ds = config.dataset;
  if (!ds.path.empty()) {
    all = read_problems(ds.path);
  } else {
    CorpusSpec spec = ds.corpus;
    spec.size += ds.shots;
    all = gen_arithmetic(spec);
  }
  require(all.size() > ds.shots, ErrorKind::kData, "dataset has no problems left after the shots");
  EvaluationSet set;
  set.shots.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(ds.shots));
  set.targets.assign(all.begin() + static_cast<std::ptrdiff_t>(ds.shots), all.end());
  return set;
}

namespace {

Strategy strategy_for(const ExperimentConfig& config, const GridCell& cell) {
  CdConfig cd = config.cd;
  cd.beta = cell.beta;
  switch (cell.method) {
    case Method::kGreedy: return Greedy{};
    case Method::kCdGreedy: return CdGreedy{cd};
    case Method::kSample: return Sample{config.cd.output_temp};
    case Method::kMaskOnly: cd.beta = 0.0; return CdSample{cd, config.mask_every_step};
    case Method::kCdSample: return CdSample{cd, config.mask_every_step};
  }
  fail(ErrorKind::kInternal, "unhandled method");
}

}  // namespace

CellOutcome evaluate_cell(const ExperimentConfig& config, const ScorerPair& scorers,
                          const EvaluationSet& data, const GridCell& cell, std::size_t cell_index,
                          const std::string& fingerprint) {
  const auto start = std::chrono::steady_clock::now();
  CellOutcome outcome;
  outcome.cell = cell;

  const Vocabulary& vocab = scorers.vocab;
  std::set<TokenId> stop{vocab.eos()};
  if (auto nl = vocab.find("\n")) stop.insert(*nl);

  std::string error;
  std::size_t correct = 0;
  std::size_t parseable = 0;
  double chars = 0.0;
  std::size_t paths = 0;
  try {
    const Strategy strategy = strategy_for(config, cell);
    // Greedy methods are deterministic: extra paths would be identical.
    const bool greedy = cell.method == Method::kGreedy || cell.method == Method::kCdGreedy;
    const std::size_t k = greedy ? 1 : static_cast<std::size_t>(cell.k);
    for (std::size_t i = 0; i < data.targets.size() && error.empty(); ++i) {
      const auto& target = data.targets[i];
      DecodeRequest request;
      request.prompt = build_fewshot_prompt(vocab, data.shots, data.shots.size(), target);
      request.max_new_tokens = config.max_new_tokens;
      request.stop = stop;
      request.strategy = strategy;
      request.seed = derive_seed(config.seed, i);
      auto sc = self_consistency(*scorers.expert, scorers.amateur.get(), vocab, request, k,
                                 config.answer_pattern);
      std::vector<std::string> texts;
      for (const auto& path : sc.paths) {
        if (!path.ok()) {
          error = "problem " + std::to_string(i) + ": " + path.error;
          break;
        }
        texts.push_back(vocab.decode(path.record->continuation.ids));
        chars += static_cast<double>(texts.back().size());
        ++paths;
      }
      if (!error.empty()) break;
      if (sc.vote.valid_paths > 0) ++parseable;
      if (sc.vote.valid_paths > 0 && sc.vote.winner == target.answer) ++correct;
      outcome.gold.push_back(target.answer);
      outcome.path_texts.push_back(std::move(texts));
    }
  } catch (const std::exception& e) {
    error = e.what();
  }

  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  auto row = [&](const std::string& metric, std::optional<double> value) {
    ResultRow r;
    r.fingerprint = fingerprint;
    r.cell = cell_index;
    r.method = std::string(to_string(cell.method));
    r.beta = cell.beta;
    r.k = cell.k;
    r.metric = metric;
    r.value = value;
    r.wall_clock_ms = ms;
    r.engine_version = kEngineVersion;
    if (!error.empty()) {
      r.status = "failed";
      r.error = error;
    }
    return r;
  };
  if (!error.empty()) {
    outcome.failed = true;
    outcome.rows.push_back(row("accuracy", std::nullopt));
    return outcome;
  }
  const auto n = static_cast<double>(data.targets.size());
  outcome.rows.push_back(row("accuracy", static_cast<double>(correct) / n));
  outcome.rows.push_back(row("parseable_fraction", static_cast<double>(parseable) / n));
  outcome.rows.push_back(row("mean_chars", paths == 0 ? 0.0 : chars / static_cast<double>(paths)));
  return outcome;
}

namespace {

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  require(!ec, ErrorKind::kData, "cannot create directory '" + parent.string() + "'");
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  RunSummary summary;
  summary.fingerprint = config_fingerprint(config);
  const auto cells = config.cells();
  require(!cells.empty(), ErrorKind::kConfiguration, "grid: produces no cells");

  const ScorerPair scorers = build_scorers(config);
  const EvaluationSet data = load_evaluation_set(config);

  std::vector<CellOutcome> outcomes(cells.size());
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      outcomes[i] = evaluate_cell(config, scorers, data, cells[i], i, summary.fingerprint);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  }

  const std::string output = options.output.value_or(config.output);
  bool rerun = false;
  if (!output.empty()) {
    std::ifstream existing(output);
    std::string line;
    while (!rerun && std::getline(existing, line)) {
      try {
        rerun = json::parse(line).value("fingerprint", "") == summary.fingerprint;
      } catch (const json::exception&) {
      }
    }
  }
  for (auto& o : outcomes) {
    summary.any_failed = summary.any_failed || o.failed;
    for (auto& r : o.rows) {
      r.rerun = rerun;
      summary.rows.push_back(r);
    }
  }
  if (!output.empty()) {
    ensure_parent(output);
    std::ofstream out(output, std::ios::app);
    require(static_cast<bool>(out), ErrorKind::kData, "cannot open results file '" + output + "'");
    for (const auto& r : summary.rows) out << r.to_json().dump() << '\n';
  }
  if (!options.generations.empty()) {
    ensure_parent(options.generations);
    std::ofstream out(options.generations, std::ios::app);
    require(static_cast<bool>(out), ErrorKind::kData,
            "cannot open generations file '" + options.generations + "'");
    for (std::size_t c = 0; c < outcomes.size(); ++c) {
      const auto& o = outcomes[c];
      for (std::size_t i = 0; i < o.path_texts.size(); ++i) {
        const std::string prompt = fewshot_text(data.shots, data.shots.size(), data.targets[i]);
        for (std::size_t p = 0; p < o.path_texts[i].size(); ++p) {
          GenerationLine g{prompt, o.path_texts[i][p], o.gold[i], std::string(to_string(o.cell.method))};
          out << format_generation_line(g, {{"cell", c}, {"beta", o.cell.beta}, {"k", o.cell.k},
                                            {"problem", i}, {"path", p}})
              << '\n';
        }
      }
    }
  }
  return summary;
}

std::string format_generation_line(const GenerationLine& g, const json& extra) {
  json j = extra.is_object() ? extra : json::object();
  j["schema_version"] = kSchemaVersion;
  j["prompt"] = g.prompt;
  j["continuation"] = g.continuation;
  if (g.gold) j["gold"] = *g.gold;
  if (!g.method.empty()) j["method"] = g.method;
  return j.dump();
}

GenerationLine parse_generation_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::kData, std::string("generation line is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::kData, "generation line must be a JSON object");
  GenerationLine g;
  try {
    g.prompt = j.at("prompt").get<std::string>();
    g.continuation = j.at("continuation").get<std::string>();
    if (j.contains("gold") && !j["gold"].is_null()) g.gold = j["gold"].get<std::string>();
    g.method = j.value("method", std::string());
  } catch (const json::exception& e) {
    fail(ErrorKind::kData, std::string("malformed generation record: ") + e.what());
  }
  return g;
}

std::vector<GenerationLine> read_generation_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open generations file '" + path + "'");
  std::vector<GenerationLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_generation_line(line));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string metric_signature(const std::vector<ResultRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.method + " " + format_number(r.beta) + " " + std::to_string(r.k) + " " + r.metric + " " +
           (r.value ? format_number(*r.value) : std::string("null")) + " " + r.status + "\n";
  }
  return out;
}

}  // namespace cdec
