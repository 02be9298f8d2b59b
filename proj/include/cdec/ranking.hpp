#pragma once

// Multiple-choice ranking under the contrastive objective.

#include <optional>
#include <string>
#include <vector>

#include "cdec/core_math.hpp"
#include "cdec/scorers.hpp"

namespace cdec {

enum class LengthBasis { kTokens, kCharacters, kNone };
std::string_view to_string(LengthBasis basis);
LengthBasis length_basis_from_string(std::string_view name);

// kMask: a realized token outside the alpha mask scores -inf.
// kNoMask: the mask is skipped and CD log-probabilities use the full vocabulary.
enum class MaskPolicy { kMask, kNoMask };

struct RankOptions {
  LengthBasis basis = LengthBasis::kCharacters;
  MaskPolicy mask = MaskPolicy::kMask;
};

struct ChoiceTask {
  TokenSequence context;
  std::vector<TokenSequence> candidates;  // completions, without BOS
  std::optional<std::size_t> gold_index;

  void validate() const;
};

struct RankedChoice {
  std::size_t index = 0;
  double raw_score = 0.0;  // nats; -inf when a token was masked out
  double normalized_score = 0.0;
  LengthBasis length_basis = LengthBasis::kCharacters;
};

struct RankResult {
  std::vector<RankedChoice> ranking;  // best first
  bool correct = false;               // top-1 == gold (false without gold)
};

// Teacher-forced sum of log softmax(CD logits) at the realized tokens.
RankedChoice score_completion(const Scorer& expert, const Scorer& amateur, const Vocabulary& vocab,
                              const TokenSequence& context, const TokenSequence& completion,
                              const CdConfig& cfg, const RankOptions& options = {});

RankResult rank_task(const Scorer& expert, const Scorer& amateur, const Vocabulary& vocab,
                     const ChoiceTask& task, const CdConfig& cfg, const RankOptions& options = {});

// Sorts by normalized score, descending, lower index first on ties.
void sort_ranking(std::vector<RankedChoice>& choices);

// Text form of a task, as stored one per line in a task file:
//   {"schema_version":1,"context":"...","candidates":["...","..."],"gold":0}
struct TaskRecord {
  std::string context;
  std::vector<std::string> candidates;
  std::optional<std::size_t> gold;
};

std::vector<TaskRecord> read_task_file(const std::string& path);
TaskRecord parse_task_line(std::string_view line);
std::string format_task_line(const TaskRecord& record);
ChoiceTask to_choice_task(const TaskRecord& record, const Vocabulary& vocab);

}  // namespace cdec
