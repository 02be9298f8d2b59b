#include "cdec/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "cdec/decoding.hpp"
#include "cdec/error.hpp"

namespace cdec {

namespace {
constexpr int kTaskSchemaVersion = 1;
}

std::string_view to_string(LengthBasis basis) {
  switch (basis) {
    case LengthBasis::kTokens: return "tokens";
    case LengthBasis::kCharacters: return "characters";
    case LengthBasis::kNone: return "none";
  }
  return "unknown";
}

LengthBasis length_basis_from_string(std::string_view name) {
  if (name == "tokens") return LengthBasis::kTokens;
  if (name == "characters" || name == "chars") return LengthBasis::kCharacters;
  if (name == "none") return LengthBasis::kNone;
  fail(ErrorKind::kConfiguration, "unknown length basis '" + std::string(name) + "'");
}

void ChoiceTask::validate() const {
  require(!context.ids.empty(), ErrorKind::kData, "task context must contain at least BOS");
  require(candidates.size() >= 2, ErrorKind::kData, "a choice task needs at least 2 candidates");
  for (const auto& c : candidates) {
    require(!c.ids.empty(), ErrorKind::kData, "empty candidate completion");
    require(c.vocab_id == context.vocab_id, ErrorKind::kScorerCompatibility,
            "candidate vocabulary differs from context vocabulary");
  }
  if (gold_index) {
    require(*gold_index < candidates.size(), ErrorKind::kData, "gold index out of range");
  }
}

RankedChoice score_completion(const Scorer& expert, const Scorer& amateur, const Vocabulary& vocab,
                              const TokenSequence& context, const TokenSequence& completion,
                              const CdConfig& cfg, const RankOptions& options) {
  cfg.validate();
  require(!completion.ids.empty(), ErrorKind::kUsage, "completion must be non-empty");
  require(!context.ids.empty(), ErrorKind::kUsage, "context must contain at least BOS");
  const auto report = check_pair(expert.descriptor(), amateur.descriptor());
  require(report.ok, ErrorKind::kScorerCompatibility, "invalid expert/amateur pair");

  TokenSequence prefix = context;
  double raw = 0.0;
  for (TokenId realized : completion.ids) {
    const auto cd = cd_step_logits(expert.score_next(prefix), amateur.score_next(prefix), cfg,
                                   options.mask == MaskPolicy::kMask);
    if (cd.excluded(realized)) {
      raw = -std::numeric_limits<double>::infinity();
      break;
    }
    raw += log_softmax_valid(cd).at(realized);
    prefix.ids.push_back(realized);
  }

  double divisor = 1.0;
  if (options.basis == LengthBasis::kTokens) {
    divisor = static_cast<double>(completion.ids.size());
  } else if (options.basis == LengthBasis::kCharacters) {
    divisor = static_cast<double>(std::max<std::size_t>(1, vocab.char_length(completion.ids)));
  }
  return RankedChoice{0, raw, raw / divisor, options.basis};
}

void sort_ranking(std::vector<RankedChoice>& choices) {
  std::stable_sort(choices.begin(), choices.end(), [](const RankedChoice& a, const RankedChoice& b) {
    if (a.normalized_score != b.normalized_score) return a.normalized_score > b.normalized_score;
    return a.index < b.index;
  });
}

RankResult rank_task(const Scorer& expert, const Scorer& amateur, const Vocabulary& vocab,
                     const ChoiceTask& task, const CdConfig& cfg, const RankOptions& options) {
  task.validate();
  RankResult result;
  result.ranking.reserve(task.candidates.size());
  for (std::size_t i = 0; i < task.candidates.size(); ++i) {
    auto choice = score_completion(expert, amateur, vocab, task.context, task.candidates[i], cfg,
                                   options);
    choice.index = i;
    result.ranking.push_back(choice);
  }
  sort_ranking(result.ranking);
  result.correct = task.gold_index && result.ranking.front().index == *task.gold_index;
  return result;
}

// --- task files ------------------------------------------------------------

TaskRecord parse_task_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("task line is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::kData, "task line must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    require(key == "schema_version" || key == "context" || key == "candidates" || key == "gold",
            ErrorKind::kData, "unknown task field '" + key + "'");
  }
  if (j.contains("schema_version")) {
    require(j["schema_version"] == kTaskSchemaVersion, ErrorKind::kData,
            "unsupported task schema_version");
  }
  TaskRecord rec;
  try {
    rec.context = j.at("context").get<std::string>();
    rec.candidates = j.at("candidates").get<std::vector<std::string>>();
    if (j.contains("gold") && !j["gold"].is_null()) rec.gold = j["gold"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("malformed task record: ") + e.what());
  }
  require(rec.candidates.size() >= 2, ErrorKind::kData, "a task needs at least 2 candidates");
  require(!rec.gold || *rec.gold < rec.candidates.size(), ErrorKind::kData,
          "gold index out of range");
  return rec;
}

std::string format_task_line(const TaskRecord& record) {
  nlohmann::json j;
  j["schema_version"] = kTaskSchemaVersion;
  j["context"] = record.context;
  j["candidates"] = record.candidates;
  j["gold"] = record.gold ? nlohmann::json(*record.gold) : nlohmann::json(nullptr);
  return j.dump();
}

std::vector<TaskRecord> read_task_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open task file '" + path + "'");
  std::vector<TaskRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_task_line(line));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ChoiceTask to_choice_task(const TaskRecord& record, const Vocabulary& vocab) {
  ChoiceTask task;
  task.context = make_prompt(vocab, record.context);
  for (const auto& c : record.candidates) task.candidates.push_back({vocab.id(), vocab.encode(c)});
  task.gold_index = record.gold;
  task.validate();
  return task;
}

}  // namespace cdec
